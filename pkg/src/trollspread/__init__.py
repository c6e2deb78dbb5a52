"""Predicting which users spread troll content: ingestion, ideology propagation,
engagement and bot-score features, and tree-ensemble classifiers."""

__version__ = "0.1.0"
