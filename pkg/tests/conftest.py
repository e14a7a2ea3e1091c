import numpy as np
import pytest

BARKER = {
    3: [1, 1, -1],
    7: [1, 1, 1, -1, -1, 1, -1],
    13: [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1],
}


def barker(n):
    return np.array(BARKER[n], dtype=complex)


def dense_convolution_matrix(s, L):
    """Loop-built convolution matrix, independent of scipy."""
    s = np.asarray(s, dtype=complex)
    N = s.size
    S = np.zeros((N + L - 1, L), dtype=complex)
    for c in range(L):
        for n in range(N):
            S[c + n, c] = s[n]
    return S


def kkt_min_isl(s, L, width, alpha):
    """Constrained LS by a dense KKT solve: min ||S_m W||^2 s.t. row_c(S) W = alpha."""
    S = dense_convolution_matrix(s, L)
    n_out = S.shape[0]
    c = (n_out - 1) // 2
    main = set(range(c - width // 2, c + width // 2 + 1))
    Sm = S[[r for r in range(n_out) if r not in main]]
    Q = Sm.conj().T @ Sm
    a = S[c]
    K = np.zeros((L + 1, L + 1), dtype=complex)
    K[:L, :L] = Q
    K[:L, L] = -a.conj()
    K[L, :L] = a
    rhs = np.zeros(L + 1, dtype=complex)
    rhs[L] = alpha
    return np.linalg.solve(K, rhs)[:L]


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def two_scatterer_scene(seed, n_cells=128, weak=3.0):
    """Seeded strong/weak pair with strong-to-weak ratio drawn from 40..80 dB."""
    r = np.random.default_rng(seed)
    ratio_db = r.uniform(40, 80)
    strong_cell, weak_cell = r.choice(np.arange(8, n_cells - 8), size=2, replace=False)
    a = np.zeros(n_cells, dtype=complex)
    a[strong_cell] = weak * 10 ** (ratio_db / 20) * np.exp(2j * np.pi * r.random())
    a[weak_cell] = weak * np.exp(2j * np.pi * r.random())
    return a, int(strong_cell), int(weak_cell)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
