from .lexicon import LexiconHierarchy, load_lexicon, parse_lexicon
from .text import (
    count_syllables,
    flesch_reading_ease,
    lexicon_percentages,
    question_ratio,
    split_sentences,
    tokenize,
)
from .compositional import clr_transform
from .residual import ResidualFit, ResidualUmbrellas
from .topics import LatentTopicModel
from .semantic import SemanticStylePca, export_exemplars
from .standardize import ColumnStandardizer
from .build import build_feature_table

__all__ = [
    "LexiconHierarchy",
    "load_lexicon",
    "parse_lexicon",
    "tokenize",
    "split_sentences",
    "count_syllables",
    "flesch_reading_ease",
    "question_ratio",
    "lexicon_percentages",
    "clr_transform",
    "ResidualFit",
    "ResidualUmbrellas",
    "LatentTopicModel",
    "SemanticStylePca",
    "export_exemplars",
    "ColumnStandardizer",
    "build_feature_table",
]
