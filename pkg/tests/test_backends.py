import os
import subprocess
import sys

import pytest

from pasmamba import _backend
from pasmamba._parallel import ordered_map, thread_count

SCRIPT = """
import hashlib
from pasmamba import BACKEND, forward, init_network, make_phantom
from pasmamba.network import NetConfig
cfg = NetConfig(channels=4, height=16, width=16, ssm_state=3)
y = forward(make_phantom(16, 16)[None, None], init_network(cfg, 2))
print(BACKEND, hashlib.sha256(y.tobytes()).hexdigest())
"""


def run_with(env_backend):
    env = dict(os.environ, PASM_BACKEND=env_backend)
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def test_fallback_can_be_forced():
    backend, _ = run_with("python")
    assert backend == "python"


@pytest.mark.skipif(_backend.BACKEND != "cython", reason="compiled kernels not built")
def test_network_bit_identical_across_backends():
    (b1, h1), (b2, h2) = run_with("python"), run_with("")
    assert (b1, b2) == ("python", "cython")
    assert h1 == h2


def test_thread_count(monkeypatch):
    monkeypatch.setenv("PASM_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("PASM_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.setenv("PASM_THREADS", "-2")
    with pytest.raises(ValueError):
        thread_count()


def test_ordered_map_preserves_order(monkeypatch):
    monkeypatch.setenv("PASM_THREADS", "4")
    assert ordered_map(lambda v: v * v, range(20)) == [v * v for v in range(20)]
