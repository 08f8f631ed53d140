import numpy as np
import pytest

from xebspoof import (
    Seed,
    determinant,
    gaussian_matrix,
    haar_unitary,
    hafnian,
    permanent,
    select_submatrix,
)
from xebspoof.kernels import Interferometer

from conftest import (
    determinant_bruteforce,
    hafnian_recursive,
    permanent_bruteforce,
    random_complex,
)


class TestPermanent:
    def test_identity(self):
        assert permanent(np.eye(3)) == pytest.approx(1.0)

    def test_two_by_two(self, rng):
        a, b, c, d = random_complex(rng, 2, 2).ravel()
        value = permanent(np.array([[a, b], [c, d]]))
        assert value == pytest.approx(a * d + b * c)

    def test_empty_and_scalar(self):
        assert permanent(np.zeros((0, 0))) == 1.0
        assert permanent(np.array([[3.5 + 1j]])) == pytest.approx(3.5 + 1j)

    def test_against_bruteforce_6x6(self, rng):
        a = random_complex(rng, 6)
        expected = permanent_bruteforce(a)
        assert abs(permanent(a) - expected) <= 1e-10 * abs(expected)

    @pytest.mark.parametrize("n", range(1, 8))
    def test_against_bruteforce_all_small_sizes(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(5):
            a = random_complex(rng, n)
            expected = permanent_bruteforce(a)
            assert abs(permanent(a) - expected) <= 1e-10 * max(abs(expected), 1e-30)

    def test_permutation_invariance(self, rng):
        a = random_complex(rng, 5)
        p = np.eye(5)[rng.permutation(5)]
        q = np.eye(5)[rng.permutation(5)]
        assert permanent(p @ a @ q) == pytest.approx(permanent(a))

    def test_rejects_nonsquare_and_oversize(self):
        with pytest.raises(ValueError):
            permanent(np.zeros((2, 3)))
        with pytest.raises(ValueError, match="limited"):
            permanent(np.zeros((29, 29)))


class TestDeterminant:
    def test_identity(self):
        assert determinant(np.eye(4)) == pytest.approx(1.0)

    def test_two_by_two(self, rng):
        a, b, c, d = random_complex(rng, 2, 2).ravel()
        assert determinant(np.array([[a, b], [c, d]])) == pytest.approx(a * d - b * c)

    def test_empty(self):
        assert determinant(np.zeros((0, 0))) == 1.0

    def test_against_bruteforce_6x6(self, rng):
        a = random_complex(rng, 6)
        expected = determinant_bruteforce(a)
        assert abs(determinant(a) - expected) <= 1e-10 * abs(expected)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            determinant(np.zeros((1, 2)))


class TestHafnian:
    def test_single_pair(self):
        b = 2.5 - 0.5j
        assert hafnian(np.array([[0, b], [b, 0]])) == pytest.approx(b)

    def test_three_matchings(self, rng):
        m = random_complex(rng, 4)
        b = m + m.T
        expected = b[0, 1] * b[2, 3] + b[0, 2] * b[1, 3] + b[0, 3] * b[1, 2]
        assert hafnian(b) == pytest.approx(expected)

    def test_against_recursive_8x8(self, rng):
        m = random_complex(rng, 8)
        b = m + m.T
        expected = hafnian_recursive(b)
        assert abs(hafnian(b) - expected) <= 1e-9 * abs(expected)

    @pytest.mark.parametrize("dim", [2, 4, 6, 8, 10])
    def test_against_recursive_all_even_dims(self, dim):
        rng = np.random.default_rng(200 + dim)
        for _ in range(3):
            m = random_complex(rng, dim)
            b = m + m.T
            expected = hafnian_recursive(b)
            assert abs(hafnian(b) - expected) <= 1e-9 * abs(expected)

    def test_permutation_invariance(self, rng):
        m = random_complex(rng, 6)
        b = m + m.T
        p = np.eye(6)[rng.permutation(6)]
        assert hafnian(p @ b @ p.T) == pytest.approx(hafnian(b))

    def test_rejects_odd_and_asymmetric(self, rng):
        with pytest.raises(ValueError, match="even"):
            hafnian(np.zeros((3, 3)))
        with pytest.raises(ValueError, match="symmetric"):
            hafnian(random_complex(rng, 4))

    def test_empty(self):
        assert hafnian(np.zeros((0, 0))) == 1.0


class TestHaarUnitary:
    def test_single_mode_unit_modulus(self):
        u = haar_unitary(1, Seed(7))
        assert abs(abs(u.matrix[0, 0]) - 1.0) <= 1e-12

    def test_deterministic(self):
        a = haar_unitary(8, Seed(123))
        b = haar_unitary(8, Seed(123))
        np.testing.assert_array_equal(a.matrix, b.matrix)

    def test_unitarity_checked_on_construction(self):
        u = haar_unitary(12, Seed(5))
        defect = np.abs(u.matrix.conj().T @ u.matrix - np.eye(12)).max()
        assert defect <= 1e-10
        with pytest.raises(ValueError, match="unitary"):
            Interferometer(np.ones((3, 3)))

    def test_first_entry_moment(self):
        # Haar moment: E|U_ij|^2 = 1/M
        m, draws = 16, 10_000
        root = Seed(2024)
        vals = np.empty(draws)
        for i in range(draws):
            vals[i] = abs(haar_unitary(m, root.child(i)).matrix[0, 0]) ** 2
        se = vals.std(ddof=1) / np.sqrt(draws)
        assert abs(vals.mean() - 1.0 / m) <= 3 * se


class TestGaussianMatrix:
    def test_second_moment(self):
        z = gaussian_matrix(1000, Seed(9)).ravel()
        assert abs(np.mean(np.abs(z) ** 2) - 1.0) <= 0.01

    def test_mean_zero(self):
        z = gaussian_matrix(1000, Seed(10)).ravel()
        se = np.abs(z).std(ddof=1) / np.sqrt(z.size)
        assert abs(z.mean()) <= 3 * se

    def test_deterministic_and_stream_separation(self):
        a = gaussian_matrix(4, Seed(3, (1,)))
        b = gaussian_matrix(4, Seed(3, (1,)))
        c = gaussian_matrix(4, Seed(3, (2,)))
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)


class TestSeed:
    def test_child_streams_differ(self):
        root = Seed(77)
        x = root.child(0).generator().standard_normal(4)
        y = root.child(1).generator().standard_normal(4)
        assert not np.array_equal(x, y)

    def test_path_identity(self):
        assert Seed(5).child(1, 2) == Seed(5, (1, 2))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            Seed(-1)
        with pytest.raises(ValueError):
            Seed(2**64)


class TestSelectSubmatrix:
    def test_single_entry(self):
        u = Interferometer(np.eye(3))
        np.testing.assert_array_equal(select_submatrix(u, [0], [0]), [[1.0]])

    def test_repeated_rows(self, rng):
        u = haar_unitary(4, Seed(11))
        sub = select_submatrix(u, [0, 0], [0, 1])
        assert sub.shape == (2, 2)
        np.testing.assert_array_equal(sub[0], sub[1])

    def test_occupation_column_repetition(self):
        # outcome (2,0,...) selects column 0 twice
        u = haar_unitary(5, Seed(12))
        sub = select_submatrix(u, [0, 1], [0, 0])
        np.testing.assert_array_equal(sub[:, 0], sub[:, 1])

    def test_out_of_range(self):
        u = Interferometer(np.eye(2))
        with pytest.raises(IndexError):
            select_submatrix(u, [0], [2])
