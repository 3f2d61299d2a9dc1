"""Hierarchical word-category lexicon: parsing and token matching.

File format (UTF-8): one ``category<TAB>pattern,pattern,...`` line per
category; ``umbrella:NAME<TAB>child,child,...`` lines declare the hierarchy.
Patterns are lowercase words; a trailing ``*`` marks a stem prefix. Lines
starting with ``#`` are comments.

Hierarchy semantics: a token counts toward an umbrella category when it
matches the umbrella's own patterns or any of its children's patterns, so
umbrella scores correlate with the sum of their children the way coarse
psycholinguistic categories do.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

from ..errors import ConfigError


@dataclass
class LexiconHierarchy:
    """Category pattern sets plus the umbrella -> children mapping."""

    categories: dict[str, set[str]]
    umbrella_children: dict[str, list[str]]
    _exact: dict[str, tuple[str, ...]] = field(default_factory=dict, repr=False)
    _stems: list[tuple[str, tuple[str, ...]]] = field(default_factory=list, repr=False)
    _token_cache: dict[str, tuple[str, ...]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for umbrella, children in self.umbrella_children.items():
            missing = [c for c in children if c not in self.categories]
            if missing:
                raise ConfigError(f"umbrella {umbrella}: unknown children {missing}")
        seen: dict[str, str] = {}
        for umbrella, children in self.umbrella_children.items():
            for child in children:
                if child in seen:
                    raise ConfigError(
                        f"category {child} is a child of both {seen[child]} and {umbrella}"
                    )
                seen[child] = umbrella
        self._build_index()

    @property
    def names(self) -> list[str]:
        return list(self.categories)

    def _effective_patterns(self, name: str) -> set[str]:
        patterns = set(self.categories[name])
        for child in self.umbrella_children.get(name, ()):
            patterns |= self.categories[child]
        return patterns

    def _build_index(self):
        exact: dict[str, set[str]] = {}
        stems: dict[str, set[str]] = {}
        for name in self.categories:
            for pat in self._effective_patterns(name):
                if pat.endswith("*"):
                    stems.setdefault(pat[:-1], set()).add(name)
                else:
                    exact.setdefault(pat, set()).add(name)
        self._exact = {w: tuple(sorted(cats)) for w, cats in exact.items()}
        self._stems = sorted((p, tuple(sorted(cats))) for p, cats in stems.items())
        self._token_cache = {}

    def match(self, token: str) -> tuple[str, ...]:
        """Categories the token counts toward (may be several)."""
        hit = self._token_cache.get(token)
        if hit is None:
            cats = set(self._exact.get(token, ()))
            for prefix, stem_cats in self._stems:
                if token.startswith(prefix):
                    cats.update(stem_cats)
            hit = tuple(sorted(cats))
            self._token_cache[token] = hit
        return hit


def parse_lexicon(text: str) -> LexiconHierarchy:
    categories: dict[str, set[str]] = {}
    umbrellas: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" not in line:
            raise ConfigError(f"lexicon line {lineno}: expected TAB separator")
        name, patterns = line.split("\t", 1)
        items = [p.strip().lower() for p in patterns.split(",") if p.strip()]
        if name.startswith("umbrella:"):
            umbrellas[name[len("umbrella:"):]] = items
        else:
            if name in categories:
                raise ConfigError(f"lexicon line {lineno}: duplicate category {name}")
            categories[name] = set(items)
    return LexiconHierarchy(categories=categories, umbrella_children=umbrellas)


def load_lexicon(path=None) -> LexiconHierarchy:
    """Load a lexicon file, or the packaged demonstration lexicon."""
    if path is None:
        text = (resources.files("acclaim.data") / "demo_lexicon.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_lexicon(text)
