from enum import Enum


class Verdict(str, Enum):
    """One-sided outcomes: a positive verdict is certified, everything else is Inconclusive."""

    IDEAL = "Ideal"
    ENTANGLED = "Entangled"
    USEFUL = "Useful"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value
