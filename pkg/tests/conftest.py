import contextlib

import pytest

from novlab import _accel, groupoid, morse_model, novikov
from novlab.groupoid import GeneratorRecord, GroupoidGraph, ObjectRecord
from novlab.novikov import TruncationContext

BACKENDS = _accel.available_backends()


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    mod = BACKENDS[request.param]
    for m in (groupoid, novikov, morse_model):
        monkeypatch.setattr(m, "kernels", mod)
    return request.param


def loop_graph(u=-1.0, index=0):
    return GroupoidGraph([ObjectRecord("p", index)], [GeneratorRecord("g", "p", "p", u)])


@pytest.fixture
def gp():
    """Single object ``p`` with loop ``g`` of value -1."""
    return loop_graph()


@pytest.fixture
def ctx5(gp):
    return TruncationContext(5.0, gp)


@contextlib.contextmanager
def use_backend(name):
    """Context-manager form of :func:`backend` for property tests."""
    mod = BACKENDS[name]
    saved = [(m, m.kernels) for m in (groupoid, novikov, morse_model)]
    try:
        for m, _ in saved:
            m.kernels = mod
        yield
    finally:
        for m, k in saved:
            m.kernels = k
