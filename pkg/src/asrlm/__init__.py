"""Language-model, lexicon and scoring toolkit for conversational telephone ASR."""

__version__ = "0.1.0"
