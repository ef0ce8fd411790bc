import os
import subprocess
import sys

import numpy as np
import pytest

from neuroconn import backend


def test_python_backend_always_available():
    assert "python" in backend.available_backends()


def test_default_prefers_compiled_when_built():
    names = backend.available_backends()
    if "compiled" in names:
        assert names[0] == "compiled"
        assert backend.get_backend(None).__name__.endswith("_kernels_c")


def test_unknown_backend_rejected():
    with pytest.raises(ValueError, match="unknown backend"):
        backend.get_backend("fortran")


def test_env_var_forces_python_backend():
    env = dict(os.environ, NEUROCONN_BACKEND="python")
    env["PYTHONPATH"] = os.pathsep.join(
        p for p in (env.get("PYTHONPATH", ""), os.path.abspath("src")) if p
    )
    out = subprocess.run(
        [sys.executable, "-c", "from neuroconn.backend import BACKEND; print(BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@pytest.mark.skipif("compiled" not in backend.available_backends(),
                    reason="compiled kernels not built")
class TestBackendEquivalence:
    def setup_method(self):
        self.c = backend.get_backend("compiled")
        self.py = backend.get_backend("python")
        self.rng = np.random.default_rng(0)

    def test_pair_grids_agree(self):
        phases = self.rng.uniform(-np.pi, np.pi, size=(10, 1200))
        assert np.abs(self.c.plv_matrix(phases) - self.py.plv_matrix(phases)).max() < 1e-12
        assert np.abs(self.c.pli_matrix(phases) - self.py.pli_matrix(phases)).max() < 1e-12
        assert np.abs(self.c.pli_matrix(phases, signed=True)
                      - self.py.pli_matrix(phases, signed=True)).max() < 1e-12

    @pytest.mark.parametrize("case", [
        # (x shape, w shape, stride, pad, groups)
        ((2, 3, 6, 7), (4, 3, 3, 2), (1, 1), (0, 0), 1),
        ((2, 4, 5, 8), (6, 2, 2, 3), (2, 1), (1, 2), 2),
        ((1, 8, 1, 9), (16, 1, 1, 3), (1, 2), (0, 1), 8),
    ])
    def test_conv_agrees(self, case):
        x_shape, w_shape, stride, pad, groups = case
        x = self.rng.standard_normal(x_shape)
        w = self.rng.standard_normal(w_shape)
        args = (*stride, *pad, groups)
        yc = self.c.conv2d_forward(x, w, *args)
        yp = self.py.conv2d_forward(x, w, *args)
        assert np.abs(yc - yp).max() < 1e-12
        dy = self.rng.standard_normal(yc.shape)
        h, wd = x_shape[2], x_shape[3]
        dic = self.c.conv2d_backward_input(dy, w, h, wd, *args)
        dip = self.py.conv2d_backward_input(dy, w, h, wd, *args)
        assert np.abs(dic - dip).max() < 1e-12
        kh, kw = w_shape[2], w_shape[3]
        dkc = self.c.conv2d_backward_kernel(dy, x, kh, kw, *args)
        dkp = self.py.conv2d_backward_kernel(dy, x, kh, kw, *args)
        assert np.abs(dkc - dkp).max() < 1e-12
