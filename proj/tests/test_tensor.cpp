#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>

#include "doctest.h"
#include "pfvae/tensor.hpp"

using namespace pfvae;

TEST_CASE("default tensor is the scalar zero") {
  Tensor t;
  CHECK(t.is_scalar());
  CHECK(t.rank() == 0);
  CHECK(t.size() == 1);
  CHECK(t.item() == 0.0);
}

TEST_CASE("shape constructor zero-fills") {
  Tensor t(Shape{2, 3});
  CHECK(t.rank() == 2);
  CHECK(t.size() == 6);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);
}

TEST_CASE("data constructor checks length") {
  CHECK_NOTHROW(Tensor(Shape{2, 2}, {1, 2, 3, 4}));
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("zero-sized dimensions are rejected") {
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), std::invalid_argument);
}

TEST_CASE("rank-2 accessor is row-major") {
  Tensor t(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.at(0, 0) == 1.0);
  CHECK(t.at(0, 2) == 3.0);
  CHECK(t.at(1, 0) == 4.0);
  CHECK(t.at(1, 2) == 6.0);
  t.at(1, 1) = 50.0;
  CHECK(t[4] == 50.0);
}

TEST_CASE("item only works on one-element tensors") {
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK(Tensor(Shape{1}, {7.0}).item() == 7.0);
  CHECK_THROWS_AS(Tensor(Shape{2}).item(), std::invalid_argument);
}

TEST_CASE("dim validates the axis") {
  Tensor t(Shape{4, 5});
  CHECK(t.dim(0) == 4);
  CHECK(t.dim(1) == 5);
  CHECK_THROWS_AS(t.dim(2), std::invalid_argument);
}

TEST_CASE("all_finite spots NaN and infinity") {
  Tensor t(Shape{3}, {1.0, 2.0, 3.0});
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("shape_str formatting") {
  CHECK(Tensor(Shape{2, 3}).shape_str() == "[2x3]");
  CHECK(Tensor(Shape{7}).shape_str() == "[7]");
  CHECK(Tensor().shape_str() == "[]");
}

TEST_CASE("full and fill") {
  Tensor t = Tensor::full(Shape{2, 2}, 1.5);
  for (std::size_t i = 0; i < 4; ++i) CHECK(t[i] == 1.5);
  t.fill(-2.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(t[i] == -2.0);
}
