import numpy as np
import pytest

from vidfactor.kernels import available_backends


@pytest.fixture(params=[b.BACKEND_NAME for b in available_backends()])
def kernel_backend(request):
    """Run a test once per importable kernel backend."""
    for backend in available_backends():
        if backend.BACKEND_NAME == request.param:
            return backend
    raise RuntimeError(f"backend {request.param} vanished")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
