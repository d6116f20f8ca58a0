"""rob2kit: retrieval-augmented, human-in-the-loop ROB2 assessment engine."""

__version__ = "0.1.0"
