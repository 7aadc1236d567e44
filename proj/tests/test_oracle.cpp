#include <gtest/gtest.h>

#include <vector>

#include "panelforge/oracle.hpp"
#include "support.hpp"

using namespace panelforge;

TEST(Oracle, ScalarFma) {
  const double a = 2, b = 3;
  double c = 1;
  gemm_naive<double>({1, 1, 1}, {std::span<const double>(&a, 1), 1, 1}, {std::span<const double>(&b, 1), 1, 1},
                     {std::span<double>(&c, 1), 1, 1});
  EXPECT_EQ(c, 7.0);
}

TEST(Oracle, IdentityLeavesB) {
  const std::vector<float> eye = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const std::vector<float> b = {0.5f, -2, 3, 4, 5.25f, 6, -7, 8, 9};
  std::vector<float> c(9, 0.0f);
  gemm_naive<float>({3, 3, 3}, {std::span<const float>(eye), 3, 3}, {std::span<const float>(b), 3, 3},
                    {std::span<float>(c), 3, 3});
  EXPECT_EQ(c, b);
}

TEST(Oracle, TwoByTwo) {
  const std::vector<double> a = {1, 2, 3, 4}, b = {5, 6, 7, 8};
  std::vector<double> c(4, 0.0);
  gemm_naive<double>({2, 2, 2}, {std::span<const double>(a), 2, 2}, {std::span<const double>(b), 2, 2},
                     {std::span<double>(c), 2, 2});
  EXPECT_EQ(c, (std::vector<double>{19, 22, 43, 50}));
}

TEST(Oracle, RespectsRowStride) {
  // A is the left 2x2 of a 2x3 buffer; the third column must be ignored.
  const std::vector<double> a = {1, 2, 99, 3, 4, 99}, b = {5, 6, 7, 8};
  std::vector<double> c = {0, 0, -1, 0, 0, -1};
  gemm_naive<double>({2, 2, 2}, {std::span<const double>(a), 2, 2, 3}, {std::span<const double>(b), 2, 2},
                     {std::span<double>(c), 2, 2, 3});
  EXPECT_EQ(c, (std::vector<double>{19, 22, -1, 43, 50, -1}));
}

TEST(Oracle, LinearInA) {
  pftest::Problem<double> p({5, 4, 3}, 7);
  std::vector<double> a2 = p.a;
  for (auto& x : a2) x *= 2;
  std::vector<double> c1(20, 0.0), c2(20, 0.0);
  gemm_naive<double>(p.dims, p.A(), p.B(), {std::span<double>(c1), 5, 4});
  gemm_naive<double>(p.dims, {std::span<const double>(a2), 5, 3}, p.B(), {std::span<double>(c2), 5, 4});
  for (std::size_t i = 0; i < c1.size(); ++i) EXPECT_EQ(c2[i], 2 * c1[i]);
}

TEST(Oracle, CheckFlagsPerturbation) {
  pftest::Problem<float> p({6, 5, 4}, 3);
  gemm_naive<float>(p.dims, p.A(), p.B(), p.C());
  EXPECT_TRUE(p.check().within);
  p.c[7] += 1e-3f;
  const auto r = p.check();
  EXPECT_FALSE(r.within);
  EXPECT_EQ(r.worst_i, 1u);
  EXPECT_EQ(r.worst_j, 2u);
}
