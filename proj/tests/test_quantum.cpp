#include "natsim/quantum.hpp"
#include "oracle_helpers.hpp"

#include <doctest.h>

using namespace natsim;

namespace {
Mat pauli_z() {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = -1.0;
    m(1, 1) = 1.0;
    return m;
}
Mat pauli_plus() {
    Mat m = Mat::Zero(2, 2);
    m(1, 0) = 1.0;
    return m;
}
}  // namespace

TEST_SUITE("quantum") {

TEST_CASE("space dimension and validation") {
    HilbertSpace s(3, 3);
    CHECK(s.dim() == 24);
    CHECK(HilbertSpace(3, 5).dim() == 40);
    CHECK_THROWS_AS(HilbertSpace(3, 1), std::invalid_argument);
    CHECK_THROWS_AS(HilbertSpace(0, 3), std::invalid_argument);
}

TEST_CASE("identity embedding is the identity") {
    HilbertSpace s(3, 3);
    const Mat id = s.embed_qubit_operator(Mat::Identity(2, 2), 1);
    CHECK((id - s.identity()).norm() == doctest::Approx(0.0));
}

TEST_CASE("pauli embeddings are traceless") {
    HilbertSpace s(3, 3);
    for (int site = 1; site <= 3; ++site) CHECK(std::abs(s.sigma_z(site).trace()) < 1e-12);
}

TEST_CASE("sigma+ sigma- projector trace against the index oracle") {
    HilbertSpace s(3, 3);
    const Mat proj = s.sigma_plus(1) * s.sigma_minus(1);
    CHECK(proj.trace().real() == doctest::Approx(12.0));  // half of dim 24

    const std::vector<Mat> factors = {Mat::Identity(2, 2), Mat::Identity(2, 2),
                                      Mat::Identity(2, 2), Mat::Identity(3, 3)};
    const Mat expected =
        oracle::embed_by_index(factors, pauli_plus() * pauli_plus().adjoint(), 0);
    CHECK((proj - expected).norm() < 1e-14);
}

TEST_CASE("embedding against the index oracle for every site") {
    HilbertSpace s(3, 4);
    const std::vector<Mat> factors = {Mat::Identity(2, 2), Mat::Identity(2, 2),
                                      Mat::Identity(2, 2), Mat::Identity(4, 4)};
    for (int site = 1; site <= 3; ++site) {
        const Mat op = oracle::random_matrix(2, 100 + unsigned(site));
        const Mat got = s.embed_qubit_operator(op, site);
        const Mat want = oracle::embed_by_index(factors, op, site - 1);
        CHECK((got - want).norm() < 1e-14);
    }
}

TEST_CASE("embedding errors") {
    HilbertSpace s(3, 3);
    CHECK_THROWS_AS(s.embed_qubit_operator(Mat::Identity(2, 2), 0), std::invalid_argument);
    CHECK_THROWS_AS(s.embed_qubit_operator(Mat::Identity(2, 2), 4), std::invalid_argument);
    CHECK_THROWS_AS(s.embed_qubit_operator(Mat::Identity(3, 3), 1), std::invalid_argument);
}

TEST_CASE("annihilation operator ladder structure") {
    HilbertSpace s2(3, 2);
    const Mat a2 = s2.annihilation();
    CHECK((a2 * a2).norm() == doctest::Approx(0.0));  // two-level truncation

    HilbertSpace s3(3, 3);
    const Mat a = s3.annihilation();
    const int i1 = s3.basis_index(0u, 1), i2 = s3.basis_index(0u, 2);
    CHECK(a(i1, i2).real() == doctest::Approx(std::sqrt(2.0)));

    // [a, a^dag] = 1 on the non-truncated Fock block
    const Mat comm = a * a.adjoint() - a.adjoint() * a;
    for (unsigned q = 0; q < 8; ++q)
        for (int n = 0; n + 1 < s3.resonator_dim; ++n) {
            const int k = s3.basis_index(q, n);
            CHECK(comm(k, k).real() == doctest::Approx(1.0));
        }
}

TEST_CASE("bright and dark operators") {
    HilbertSpace s(3, 2);
    const auto bd = bright_dark_operators(s);

    // sigma_b^+ |g> = (|q1> + |q2>)/sqrt(2)
    Vec ground = Vec::Zero(s.dim());
    ground[s.basis_index(0u, 0)] = 1.0;
    const Vec bright = bd.sigma_b_plus * ground;
    CHECK(bright.norm() == doctest::Approx(1.0));
    CHECK(std::abs(bright[s.basis_index(0b001u, 0)] - 1.0 / std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(bright[s.basis_index(0b010u, 0)] - 1.0 / std::sqrt(2.0)) < 1e-14);

    // <g| sigma_b^- sigma_b^+ |g> = 1
    CHECK((ground.adjoint() * bd.sigma_b_minus * bd.sigma_b_plus * ground)(0, 0).real() ==
          doctest::Approx(1.0));

    // sigma_b^+ sigma_d^- + sigma_d^+ sigma_b^- = sigma_1^+ sigma_1^- - sigma_2^+ sigma_2^-
    const Mat lhs = bd.sigma_b_plus * bd.sigma_d_minus + bd.sigma_d_plus * bd.sigma_b_minus;
    const Mat rhs = s.sigma_plus(1) * s.sigma_minus(1) - s.sigma_plus(2) * s.sigma_minus(2);
    CHECK((lhs - rhs).norm() < 1e-13);

    // unitarity on the single-excitation subspace
    const Mat sum_bd = bd.sigma_b_plus * bd.sigma_b_minus + bd.sigma_d_plus * bd.sigma_d_minus;
    const Mat sum_12 = s.sigma_plus(1) * s.sigma_minus(1) + s.sigma_plus(2) * s.sigma_minus(2);
    CHECK((sum_bd - sum_12).norm() < 1e-13);
}

TEST_CASE("embeddings at distinct sites commute") {
    HilbertSpace s(3, 3);
    for (unsigned trial = 0; trial < 9; ++trial) {
        const int i = 1 + int(trial % 3);
        const int j = 1 + int((trial + 1) % 3);
        const Mat a = oracle::random_matrix(2, 10 + trial);
        const Mat b = oracle::random_matrix(2, 50 + trial);
        const Mat ea = s.embed_qubit_operator(a, i);
        const Mat eb = s.embed_qubit_operator(b, j);
        CHECK((ea * eb - eb * ea).norm() < 1e-12);
    }
}

TEST_CASE("pauli z embedding is involutive") {
    HilbertSpace s(3, 3);
    for (int site = 1; site <= 3; ++site) {
        const Mat z = s.embed_qubit_operator(pauli_z(), site);
        CHECK((z * z - s.identity()).norm() < 1e-13);
    }
}

TEST_CASE("hermiticity check helper") {
    CHECK(is_hermitian(pauli_z()));
    CHECK_FALSE(is_hermitian(pauli_plus()));
}

}  // TEST_SUITE
