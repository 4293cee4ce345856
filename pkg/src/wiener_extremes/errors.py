"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the region where a formula is defined."""


class SeriesConvergenceError(ArithmeticError):
    """An infinite series hit its term cap before the stop rule fired."""

    def __init__(self, series: str, terms: int, last_term: float):
        self.series = series
        self.terms = terms
        self.last_term = last_term
        super().__init__(
            f"series {series!r} did not converge after {terms} terms "
            f"(last term {last_term:.3e})"
        )


class ConsistencyError(ArithmeticError):
    """A computed value violates a bound it must satisfy by construction."""


class ResourceError(MemoryError):
    """A simulation request exceeds the configured memory budget."""
