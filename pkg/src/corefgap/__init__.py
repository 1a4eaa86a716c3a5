"""Multi-dataset coreference evaluation with disaggregated scores and
generalization-gap significance testing."""

__version__ = "0.1.0"
