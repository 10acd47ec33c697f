"""Sequential D-optimal design for generalized linear models.

The package implements an adaptive Wynn-type exchange algorithm on a
finite candidate grid: each step adds the grid point maximizing the
current sensitivity function, interleaved with maximum-likelihood
re-estimation of the model parameters from the accumulating responses.
"""

from .errors import (
    AdwynnError,
    ConfigError,
    DesignError,
    DomainError,
    EstimationError,
    InsufficientSampleError,
    ResponseDomainError,
    SequencingError,
    SessionIntegrityError,
    SingularInformationError,
    SpecError,
    StaleSuggestionError,
    UnknownSessionError,
)
from .families import (
    BERNOULLI,
    GAUSSIAN,
    LINK_CATALOG,
    POISSON,
    Bernoulli,
    Family,
    Gaussian,
    Interval,
    LinkedResponse,
    Poisson,
    expit,
    linked_response,
)

__version__ = "0.1.0"
