"""
UVDS: learn a semantic-attribute to visual-feature embedding, synthesize
features for unseen classes and evaluate zero-shot recognition on them.
"""

__version__ = "0.1.0"
