import pytest

from liouville_gf.backend import exact_ground_state
from liouville_gf.lattice import LatticeModel, build_hubbard
from liouville_gf.oracle import lehmann_greens
from liouville_gf.recursion import run_recursion

# dense 256x256 diagonalization of the independently built matrix (dense.py)
E0_DENSE = -9.953145308684554


class Hubbard4:
    def __init__(self):
        self.model = LatticeModel(4, t=1.0, U=4.0, mu=2.0)
        self.H = build_hubbard(self.model)
        self.ground, self.energy = exact_ground_state(self.H, self.model)
        self.lehmann = lehmann_greens(self.H, self.model, self.ground, self.energy)
        self._runs = {}

    def run(self, seed, k_max=34, targets=True):
        key = (seed, k_max, targets)
        if key not in self._runs:
            _, spin = self.model.site_spin(seed)
            tg = [p for p in range(8) if self.model.site_spin(p)[1] == spin and p != seed] if targets else []
            self._runs[key] = run_recursion(self.model, self.H, seed, self.ground, k_max=k_max, offdiag_targets=tg)
        return self._runs[key]


@pytest.fixture(scope="session")
def hubbard4():
    return Hubbard4()


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record and print a PASS/FAIL line, then assert it."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
