"""Turn ten workers' answer selections into a gold set, or reject the question."""

from dppanswer import AnnotationSheet, aggregate, tally

answers = ("A1", "A2", "A3", "A4", "A5")

agreed = AnnotationSheet.from_lists(
    "agreed", [["A1"]] * 4 + [["A1", "A2"]] * 3 + [["A1", "A3"]] * 2 + [["A1", "A4"]], answers
)
split = AnnotationSheet.from_lists(
    "split", [["A3"]] * 3 + [["A5"]] * 3 + [["A3", "A5"]] * 2 + [["A3", "A4", "A5"]] + [["A1"]], answers
)

for sheet in (agreed, split):
    print(sheet.question_id)
    for ids, count in tally(sheet):
        print(f"  {sorted(ids)}: {count}")
    print("  ->", aggregate(sheet))
