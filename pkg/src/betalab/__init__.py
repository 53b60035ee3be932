"""Exact beta-expansion toolkit: words, dyadic arithmetic, fixed-base and
parameter-space cylinders, and seeded hit experiments."""

from betalab.dyadic import Dyadic, Enclosure, Tolerance, to_dyadic
from betalab.expansion import expand, expansion_of_one, star_expansion_of_one
from betalab.words import Ordering, Word, lex_compare

__all__ = [
    "Dyadic",
    "Enclosure",
    "Ordering",
    "Tolerance",
    "Word",
    "expand",
    "expansion_of_one",
    "lex_compare",
    "star_expansion_of_one",
    "to_dyadic",
]

__version__ = "0.1.0"
