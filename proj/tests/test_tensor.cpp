#include <catch2/catch_amalgamated.hpp>

#include "poe/tensor.hpp"

using poe::Tensor;

TEST_CASE("construction and element access") {
    Tensor z = Tensor::zeros(2, 3);
    REQUIRE(z.rows() == 2);
    REQUIRE(z.cols() == 3);
    REQUIRE(z.numel() == 6);
    for (std::int64_t i = 0; i < 6; ++i) {
        REQUIRE(z[i] == 0.0);
    }

    Tensor r = Tensor::row({1.0, 2.0, 3.0});
    REQUIRE(r.rows() == 1);
    REQUIRE(r.cols() == 3);
    REQUIRE(r.at(0, 2) == 3.0);

    Tensor c = Tensor::column({4.0, 5.0});
    REQUIRE(c.rows() == 2);
    REQUIRE(c.cols() == 1);
    REQUIRE(c.at(1, 0) == 5.0);

    Tensor f = Tensor::full({2, 2}, 7.5);
    REQUIRE(f.at(0, 0) == 7.5);
    REQUIRE(f.at(1, 1) == 7.5);

    Tensor s = Tensor::scalar(-2.0);
    REQUIRE(s.is_scalar());
    REQUIRE(s.scalar_value() == -2.0);
    REQUIRE_THROWS_AS(f.scalar_value(), poe::Error);
}

TEST_CASE("row-major layout") {
    Tensor t = Tensor::zeros(2, 3);
    t.at(0, 0) = 1;
    t.at(0, 1) = 2;
    t.at(0, 2) = 3;
    t.at(1, 0) = 4;
    REQUIRE(t[0] == 1);
    REQUIRE(t[1] == 2);
    REQUIRE(t[2] == 3);
    REQUIRE(t[3] == 4);
}

TEST_CASE("uniform fill is bounded and seed-deterministic") {
    poe::Rng a(42), b(42), c(43);
    Tensor ta = Tensor::uniform({4, 5}, a, -0.1, 0.1);
    Tensor tb = Tensor::uniform({4, 5}, b, -0.1, 0.1);
    Tensor tc = Tensor::uniform({4, 5}, c, -0.1, 0.1);
    REQUIRE(ta.bitwise_equal(tb));
    REQUIRE_FALSE(ta.bitwise_equal(tc));
    for (std::int64_t i = 0; i < ta.numel(); ++i) {
        REQUIRE(ta[i] >= -0.1);
        REQUIRE(ta[i] < 0.1);
    }
}

TEST_CASE("matmul accumulate kernels") {
    Tensor a = Tensor::zeros(2, 3);
    Tensor b = Tensor::zeros(3, 2);
    double av[] = {1, 2, 3, 4, 5, 6};
    double bv[] = {7, 8, 9, 10, 11, 12};
    for (int i = 0; i < 6; ++i) {
        a[i] = av[i];
        b[i] = bv[i];
    }
    Tensor c = Tensor::zeros(2, 2);
    poe::matmul_acc(a, b, c);
    // [1 2 3; 4 5 6] * [7 8; 9 10; 11 12] = [58 64; 139 154]
    REQUIRE(c.at(0, 0) == 58.0);
    REQUIRE(c.at(0, 1) == 64.0);
    REQUIRE(c.at(1, 0) == 139.0);
    REQUIRE(c.at(1, 1) == 154.0);

    // accumulates instead of overwriting
    poe::matmul_acc(a, b, c);
    REQUIRE(c.at(0, 0) == 116.0);

    // A * B^T with B stored as [2,3]
    Tensor bt = Tensor::zeros(2, 3);
    for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 2; ++k) {
            bt.at(k, r) = b.at(r, k);
        }
    }
    Tensor c2 = Tensor::zeros(2, 2);
    poe::matmul_trans_b_acc(a, bt, c2);
    REQUIRE(c2.at(0, 0) == 58.0);
    REQUIRE(c2.at(1, 1) == 154.0);

    // A^T * B with A stored as [3,2] transposed input
    Tensor at = Tensor::zeros(3, 2);
    for (int r = 0; r < 2; ++r) {
        for (int k = 0; k < 3; ++k) {
            at.at(k, r) = a.at(r, k);
        }
    }
    Tensor c3 = Tensor::zeros(2, 2);
    poe::matmul_trans_a_acc(at, b, c3);
    REQUIRE(c3.at(0, 0) == 58.0);
    REQUIRE(c3.at(1, 0) == 139.0);
}

TEST_CASE("shape and finiteness predicates") {
    Tensor a = Tensor::zeros(2, 2);
    Tensor b = Tensor::zeros(2, 2);
    Tensor c = Tensor::zeros(2, 3);
    REQUIRE(a.same_shape(b));
    REQUIRE_FALSE(a.same_shape(c));
    REQUIRE(a.all_finite());
    b.at(1, 1) = std::numeric_limits<double>::infinity();
    REQUIRE_FALSE(b.all_finite());
    b.at(1, 1) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_FALSE(b.all_finite());
    Tensor m = Tensor::row({-3.0, 2.0});
    REQUIRE(m.max_abs() == 3.0);
}

TEST_CASE("bitwise equality and content hash") {
    poe::Rng rng(7);
    Tensor a = Tensor::uniform({3, 3}, rng, -1, 1);
    Tensor b = a;
    REQUIRE(a.bitwise_equal(b));
    REQUIRE(a.content_hash() == b.content_hash());
    b[4] = std::nextafter(b[4], 2.0);
    REQUIRE_FALSE(a.bitwise_equal(b));
    REQUIRE(a.content_hash() != b.content_hash());
    // negative zero differs bitwise from zero
    Tensor z1 = Tensor::scalar(0.0);
    Tensor z2 = Tensor::scalar(-0.0);
    REQUIRE_FALSE(z1.bitwise_equal(z2));
}
