"""
Tests for sequence specs, windows, counting and density
"""

import numpy as np
import pytest

from primelab_modules.config import INT64_MAX
from primelab_modules.errors import BudgetError, PreconditionError, SpecSyntaxError
from primelab_modules.sequences import (
    ArithmeticProgression, ExplicitList, PolynomialRange, PowersOfTwo, PseudoRandomOffset,
    ZelinskyLacunary, check_polynomial_density, count_array, counting_function,
    enumerate_window, estimate_density, in_zelinsky_gap, parse_spec, polynomial_tail_start,
    render_spec, zelinsky_block,
)

SQUARE_PLUS_ONE = PolynomialRange((1, 0, 1))
INTEGERS = ArithmeticProgression(1, 0)


# ---------- Windows ----------

def test_window_examples():
    assert enumerate_window(PowersOfTwo(), 100).tolist() == [2, 4, 8, 16, 32, 64]
    assert enumerate_window(ArithmeticProgression(4, 1), 14).tolist() == [5, 9, 13]
    assert enumerate_window(SQUARE_PLUS_ONE, 26).tolist() == [2, 5, 10, 17, 26]


def test_polynomial_window_with_non_monotone_prefix():
    # n^2 - 10n + 26 runs 17, 10, 5, 2, 1, 2, 5, ...
    spec = PolynomialRange((26, -10, 1))
    assert enumerate_window(spec, 20).tolist() == [1, 2, 5, 10, 17]


def test_polynomial_window_skips_zero_and_negative_values():
    assert enumerate_window(PolynomialRange((-3, 1)), 3).tolist() == [1, 2, 3]
    assert enumerate_window(PolynomialRange((0, 0, -1)), 50).tolist() == [1, 4, 9, 16, 25, 36, 49]


def test_polynomial_window_matches_direct_evaluation():
    spec = PolynomialRange((-40, 3, -7, 2))
    N = 5000
    window = set(enumerate_window(spec, N).tolist())
    direct = {abs(spec.evaluate(n)) for n in range(1, 200)} & set(range(1, N + 1))
    assert window == direct


def test_polynomial_tail_start():
    assert polynomial_tail_start((1, 0, 1)) >= 1
    tail = polynomial_tail_start((26, -10, 1))
    values = [abs(26 - 10 * n + n * n) for n in range(tail, tail + 50)]
    assert values == sorted(set(values))


def test_window_is_ascending_and_read_only():
    window = enumerate_window(PseudoRandomOffset(5), 3000)
    elements = window.elements
    assert np.all(np.diff(elements) > 0)
    assert elements.min() >= 1 and elements.max() <= 3000
    with pytest.raises(ValueError):
        elements[0] = 7


def test_surrogate_elements():
    window = enumerate_window(PseudoRandomOffset(5), 3000)
    assert len(window) == 999
    offsets = window.elements - 3 * np.arange(1, 1000)
    assert set(offsets.tolist()) == {1, 2}


def test_surrogate_prefix_is_stable():
    small = enumerate_window(PseudoRandomOffset(9), 10**3).tolist()
    large = enumerate_window(PseudoRandomOffset(9), 10**6).tolist()
    assert large[:len(small)] == small
    assert enumerate_window(PseudoRandomOffset(10), 10**3).tolist() != small


def test_window_budget():
    with pytest.raises(BudgetError):
        enumerate_window(INTEGERS, 10**6, max_elements=1000)


def test_window_truncation_flag():
    spec = ExplicitList((1, 2**63))
    window = enumerate_window(spec, 2**64)
    assert window.truncated
    assert window.tolist() == [1]
    assert not enumerate_window(spec, INT64_MAX).truncated


def test_window_rejects_bad_bound():
    with pytest.raises(PreconditionError):
        enumerate_window(INTEGERS, 0)


# ---------- Counting ----------

def test_counting_examples():
    assert counting_function(INTEGERS, 10) == 10
    assert counting_function(PowersOfTwo(), 1) == 0
    assert counting_function(SQUARE_PLUS_ONE, 100) == 9


@pytest.mark.parametrize('spec', [
    INTEGERS, ArithmeticProgression(4, 1), PowersOfTwo(), SQUARE_PLUS_ONE,
    ZelinskyLacunary(), ZelinskyLacunary('even'), PseudoRandomOffset(1),
    ExplicitList((3, 7, 8, 100)),
])
def test_counting_matches_window_and_is_monotone(spec):
    ns = [0, 1, 2, 3, 15, 16, 99, 100, 255, 256, 1000, 4096]
    counts = [counting_function(spec, n) for n in ns]
    assert counts == sorted(counts)
    for n, c in zip(ns[1:], counts[1:]):
        assert c == len(enumerate_window(spec, n))
    assert count_array(spec, ns).tolist() == counts


def test_counting_closed_form_reaches_int64():
    assert counting_function(PowersOfTwo(), INT64_MAX) == 62
    assert counting_function(INTEGERS, INT64_MAX) == INT64_MAX


# ---------- Zelinsky blocks ----------

def test_zelinsky_blocks():
    assert zelinsky_block(1) is None
    assert [zelinsky_block(m) for m in (2, 3, 4, 15, 16, 255, 256, 65535, 65536)] == [0, 0, 1, 1, 2, 2, 3, 3, 4]


def test_zelinsky_gap_property():
    elements = set(enumerate_window(ZelinskyLacunary(), 2**16).tolist())
    for lo, hi in ((2, 3), (16, 255)):            # even blocks are empty
        assert not elements & set(range(lo, hi + 1))
    for lo, hi in ((4, 15), (256, 65535)):        # odd blocks are full
        assert set(range(lo, hi + 1)) <= elements


def test_zelinsky_complement():
    odd, even = ZelinskyLacunary('odd'), ZelinskyLacunary('even')
    for n in (1, 2, 3, 4, 15, 16, 200, 255, 256, 10**5, 10**9):
        assert counting_function(odd, n) + counting_function(even, n) == n
    assert in_zelinsky_gap(odd, 20) and not in_zelinsky_gap(even, 20)
    assert in_zelinsky_gap(even, 5) and not in_zelinsky_gap(odd, 5)


# ---------- Density ----------

def test_density_of_positive_integers():
    check = check_polynomial_density(INTEGERS, 1, 1, (1, 10**4))
    assert check.holds and check.counterexample is None


def test_powers_of_two_are_not_polynomially_dense():
    check = check_polynomial_density(PowersOfTwo(), 2, 1, (1, 10**6))
    assert not check.holds
    assert check.counterexample == 1
    assert check.count_at_counterexample == 0


@pytest.mark.parametrize('alpha, expected', [(1, 16), (2, 145)])
def test_zelinsky_fails_inside_even_block(alpha, expected):
    spec = ZelinskyLacunary()
    check = check_polynomial_density(spec, alpha, 1, (16, 255))
    assert not check.holds
    assert check.counterexample == expected
    assert in_zelinsky_gap(spec, check.counterexample)


@pytest.mark.parametrize('alpha', [1, 2, 3])
def test_zelinsky_fails_from_two(alpha):
    spec = ZelinskyLacunary()
    check = check_polynomial_density(spec, alpha, 1, (2, 10**5))
    assert check.counterexample == 2
    assert zelinsky_block(2) == 0 and in_zelinsky_gap(spec, 2)


@pytest.mark.parametrize('alpha, K, expected', [(1, 1, 4), (2, 1, 10), (3, 1.5, 9)])
def test_zelinsky_complement_fails_inside_odd_block(alpha, K, expected):
    spec = ZelinskyLacunary('even')
    check = check_polynomial_density(spec, alpha, K, (2, 10**5))
    assert not check.holds
    assert check.counterexample == expected
    assert zelinsky_block(expected) == 1
    assert in_zelinsky_gap(spec, expected)


def test_density_preconditions():
    with pytest.raises(PreconditionError):
        check_polynomial_density(INTEGERS, 0.5, 1, (1, 10))
    with pytest.raises(PreconditionError):
        check_polynomial_density(INTEGERS, 1, 0, (1, 10))
    with pytest.raises(PreconditionError):
        check_polynomial_density(INTEGERS, 1, 1, (10, 1))


def test_estimate_density():
    squares = ExplicitList(tuple(j * j for j in range(1, 1001)))
    assert estimate_density(squares, 10**6).alpha_hat == pytest.approx(2.0, abs=1e-6)
    assert estimate_density(INTEGERS, 10**4).alpha_hat == pytest.approx(1.0, abs=1e-3)
    surrogate = estimate_density(PseudoRandomOffset(1), 10**5)
    assert 0.99 <= surrogate.alpha_hat <= 1.01
    assert surrogate.K_hat > 0 and surrogate.max_residual >= 0


def test_estimate_density_needs_ten_elements():
    with pytest.raises(PreconditionError):
        estimate_density(PowersOfTwo(), 100)


# ---------- Text form ----------

@pytest.mark.parametrize('text', [
    'poly:1,0,1', 'poly:-3,0,2', 'ap:4,1', 'pow2', 'zelinsky', 'zelinsky:even',
    'surrogate:42', 'list:1,5,9',
])
def test_spec_text_round_trip(text):
    spec = parse_spec(text)
    assert render_spec(spec) == text
    assert parse_spec(render_spec(spec)) == spec


def test_list_file(tmp_path):
    path = tmp_path / 'elements.txt'
    path.write_text("# squares\n1\n4\n\n9  # nine\n16\n")
    spec = parse_spec(f'list:@{path}')
    assert spec.elements == (1, 4, 9, 16)
    assert parse_spec(render_spec(spec)) == spec


@pytest.mark.parametrize('text', ['', 'poly:1,x', 'ap:1', 'pow2:3', 'cubes', 'surrogate:'])
def test_malformed_spec_text(text):
    with pytest.raises(SpecSyntaxError):
        parse_spec(text)


@pytest.mark.parametrize('text', ['poly:1', 'poly:1,0', 'ap:0,1', 'list:3,2', 'list:0,1', 'zelinsky:odd2'])
def test_invalid_spec_values(text):
    with pytest.raises(PreconditionError):
        parse_spec(text)
