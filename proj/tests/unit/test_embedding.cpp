// Copyright (C) 2026 The mudoc Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mudoc/embedding.hpp"
#include "mudoc/error.hpp"

using namespace mudoc;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Cosine, SelfAndOrthogonal) {
    const std::vector<float> v{0.3f, -1.2f, 2.0f};
    EXPECT_NEAR(cosine(v, v), 1.0, 1e-12);
    const std::vector<float> x{1, 0};
    const std::vector<float> y{0, 1};
    EXPECT_DOUBLE_EQ(cosine(x, y), 0.0);
}

TEST(Cosine, MatchesIndependentArithmetic) {
    std::mt19937_64 rng(9);
    std::normal_distribution<float> n;
    for (int t = 0; t < 100; ++t) {
        const std::size_t dim = 1 + rng() % 300;
        std::vector<float> a(dim), b(dim);
        for (auto& v : a) v = n(rng);
        for (auto& v : b) v = n(rng);
        long double d = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < dim; ++i) {
            d += static_cast<long double>(a[i]) * b[i];
            na += static_cast<long double>(a[i]) * a[i];
            nb += static_cast<long double>(b[i]) * b[i];
        }
        const double oracle = static_cast<double>(d / std::sqrt(na * nb));
        EXPECT_NEAR(cosine(a, b), oracle, 1e-12);
    }
}

TEST(Cosine, Errors) {
    const std::vector<float> a{1, 2};
    const std::vector<float> b{1, 2, 3};
    const std::vector<float> z{0, 0};
    const std::vector<float> bad{NAN, 1};
    EXPECT_EQ(code_of([&] { cosine(a, b); }), ErrorCode::kDimMismatch);
    EXPECT_EQ(code_of([&] { cosine(a, z); }), ErrorCode::kZeroVector);
    EXPECT_EQ(code_of([&] { cosine(a, bad); }), ErrorCode::kInvalidArgument);
}

TEST(Normalize, UnitLengthAndZeroRejected) {
    std::vector<float> v{3, 4};
    normalize(v);
    EXPECT_FLOAT_EQ(v[0], 0.6f);
    EXPECT_FLOAT_EQ(v[1], 0.8f);
    std::vector<float> z{0, 0, 0};
    EXPECT_EQ(code_of([&] { normalize(z); }), ErrorCode::kZeroVector);
}

TEST(Families, NamesAndDefaultDims) {
    for (auto f : kAllFamilies) EXPECT_EQ(parse_family(to_string(f)), f);
    EXPECT_EQ(default_dim(EmbeddingFamily::kCtxText), 768);
    EXPECT_EQ(default_dim(EmbeddingFamily::kQueryText), 768);
    EXPECT_EQ(default_dim(EmbeddingFamily::kJointText), 512);
    EXPECT_EQ(default_dim(EmbeddingFamily::kJointImage), 512);
    EXPECT_EQ(to_string(EmbeddingFamily::kCtxText), "ctx_text");
}
