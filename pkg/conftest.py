import numpy as np
import pytest
from _pytest.doctest import DoctestItem


@pytest.fixture(autouse=True)
def _numpy_legacy_repr_for_doctests(request):
    """Doctests were written against numpy<2 scalar reprs (``0.0`` rather
    than ``np.float64(0.0)``); print them the same way under numpy>=2."""
    if not isinstance(request.node, DoctestItem) or \
            int(np.__version__.split('.')[0]) < 2:
        yield
        return
    saved = np.get_printoptions()
    np.set_printoptions(legacy='1.25')
    try:
        yield
    finally:
        np.set_printoptions(**saved)
