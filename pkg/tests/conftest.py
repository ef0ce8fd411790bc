import pytest

from neuroconn.backend import available_backends, get_backend


@pytest.fixture(params=available_backends())
def kernels(request):
    """Run kernel-level tests against every available backend."""
    return get_backend(request.param)
