"""wikiforge: factoid memory construction, hierarchical organization, and
cited wiki-style article generation with pluggable model backends."""

__version__ = "0.1.0"
