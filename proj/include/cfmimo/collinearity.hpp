// SPDX-License-Identifier: Apache-2.0
//
// cfmimo: channel laboratory for co-located, distributed and cell-free massive MIMO arrays
// Copyright (C) 2026 The cfmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "cfmimo/constants.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cfmimo
{
    // sum(a .* b) / (||a||_F ||b||_F), clamped to [0, 1] for non-negative inputs.
    // Throws std::invalid_argument on a shape mismatch or a zero-norm input.
    template <typename DerivedA, typename DerivedB>
    typename DerivedA::Scalar collinearity(const Eigen::DenseBase<DerivedA> &a, const Eigen::DenseBase<DerivedB> &b)
    {
        using Scalar = typename DerivedA::Scalar;
        if (a.rows() != b.rows() || a.cols() != b.cols())
            throw std::invalid_argument("Collinearity needs inputs of equal shape.");
        const Scalar na = a.derived().matrix().norm();
        const Scalar nb = b.derived().matrix().norm();
        if (!(na > Scalar(0)) || !(nb > Scalar(0)))
            throw std::invalid_argument("Collinearity of a zero-norm input is undefined.");
        const Scalar g = (a.derived().array() * b.derived().array()).sum() / (na * nb);
        return std::clamp(g, Scalar(0), Scalar(1));
    }

    // Pairwise collinearity of A inputs at one block. Entries with a zero-norm input are NaN.
    template <typename Matrix>
    Eigen::MatrixXd collinearity_matrix(const std::vector<Matrix> &inputs)
    {
        const Eigen::Index A = static_cast<Eigen::Index>(inputs.size());
        Eigen::MatrixXd G = Eigen::MatrixXd::Constant(A, A, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> norms(inputs.size());
        for (Eigen::Index i = 0; i < A; ++i)
            norms[i] = inputs[i].norm();
        for (Eigen::Index i = 0; i < A; ++i)
        {
            if (!(norms[i] > 0.0))
                continue;
            G(i, i) = 1.0;
            for (Eigen::Index j = i + 1; j < A; ++j)
            {
                if (!(norms[j] > 0.0))
                    continue;
                const double g = std::clamp((inputs[i].array() * inputs[j].array()).sum() / (norms[i] * norms[j]),
                                            0.0, 1.0);
                G(i, j) = G(j, i) = g;
            }
        }
        return G;
    }

    // Running mean of per-block matrices, skipping undefined (NaN) entries
    class CollinearityAverage
    {
    public:
        explicit CollinearityAverage(Eigen::Index antennas)
            : sum_(Eigen::MatrixXd::Zero(antennas, antennas)), count_(Eigen::MatrixXi::Zero(antennas, antennas))
        {
        }

        void add(const Eigen::MatrixXd &block)
        {
            if (block.rows() != sum_.rows() || block.cols() != sum_.cols())
                throw std::invalid_argument("Collinearity matrix size mismatch.");
            for (Eigen::Index j = 0; j < block.cols(); ++j)
                for (Eigen::Index i = 0; i < block.rows(); ++i)
                    if (!std::isnan(block(i, j)))
                    {
                        sum_(i, j) += block(i, j);
                        count_(i, j) += 1;
                    }
            ++blocks_;
        }

        Eigen::Index blocks() const { return blocks_; }

        // Throws std::invalid_argument when no block was added; pairs never defined are NaN
        Eigen::MatrixXd mean() const
        {
            if (blocks_ == 0)
                throw std::invalid_argument("Average collinearity needs at least one block.");
            Eigen::MatrixXd m(sum_.rows(), sum_.cols());
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                for (Eigen::Index i = 0; i < m.rows(); ++i)
                    m(i, j) = count_(i, j) > 0 ? sum_(i, j) / count_(i, j) : std::numeric_limits<double>::quiet_NaN();
            return m;
        }

    private:
        Eigen::MatrixXd sum_;
        Eigen::MatrixXi count_;
        Eigen::Index blocks_ = 0;
    };

    // Mean of scalar per-block values; throws std::invalid_argument for an empty set
    inline double average_collinearity(const std::vector<double> &values)
    {
        if (values.empty())
            throw std::invalid_argument("Average collinearity needs at least one block.");
        double s = 0.0;
        for (double v : values)
            s += v;
        return s / static_cast<double>(values.size());
    }
}
