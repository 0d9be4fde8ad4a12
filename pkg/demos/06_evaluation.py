"""Metric suite: informativeness counts, citation quality via entailment,
ROUGE recalls, utilization, and heading-assignment precision.

Run from the repository root:  python3 demos/06_evaluation.py
"""

from wikiforge.evaluation import (
    RuleBasedRecognizer,
    batch_utilization,
    heading_assignment_precision,
    informativeness,
    reference_recalls,
    rouge_recall,
    utilization,
)
from wikiforge.gateway import MockChatBackend, MockEmbedBackend, ModelGateway
from wikiforge.generation import parse_rendered

ARTICLE = (
    "Cambodia hosted the games in Phnom Penh.[1] It cost $30 million on May 5, 2023.[1]\n\n"
    "# Venues\n\n"
    "The Morodok Techo National Stadium seats 60,000 people.[2]\n\n"
    "# References\n\n"
    "[1] http://example.test/overview\n"
    "[2] http://example.test/stadium\n"
)

parsed = parse_rendered(ARTICLE)
counts = informativeness(parsed)
print("sections:", counts.section_count_total, "| words:", counts.word_count)
print("entities:", counts.entity_count, "| numerals:", counts.numerical_count)

# The built-in recognizer is rule-based: capitalized runs for entities, an
# ordered date/currency/percent/number regex set for numerals.
recognizer = RuleBasedRecognizer()
print("numeral mentions:", recognizer.numerals("It cost $30 million on May 5, 2023."))

# ROUGE recalls against a reference article (percent scale).
r1, rl = rouge_recall("a b c", "a b d")
print(f"ROUGE-1 recall {r1:.2f}, ROUGE-L recall {rl:.2f}")

entity_recall, numeric_recall = reference_recalls(
    "Cambodia spent $30 million.", "Cambodia and Phnom Penh spent $30 million."
)
print(f"entity recall {entity_recall:.1f}, numerical recall {numeric_recall:.1f}")

# Utilization: share of collected pages that end up cited; batch runs
# macro-average the per-topic rates (averaged rates != pooled ratio).
_, _, rate1 = utilization(["a", "b", "c", "d", "e"], ["a", "b", "c"])
_, _, rate2 = utilization(["x", "y"], ["x", "y"])
print(f"per-topic rates {rate1:.0f} and {rate2:.0f} -> macro {batch_utilization([rate1, rate2]):.1f}")

# Heading-assignment precision: does cosine argmax pick the gold heading?
gateway = ModelGateway(MockChatBackend(), MockEmbedBackend(dimension=64))
cases = [
    ("granite quarry walls", "Granite Quarry", ["Granite Quarry", "Lantern Parade"]),
    ("lantern parade night", "Lantern Parade", ["Granite Quarry", "Lantern Parade"]),
    ("granite quarry miners", "Lantern Parade", ["Granite Quarry", "Lantern Parade"]),
]
print(f"heading precision: {heading_assignment_precision(gateway, cases):.1f}")
