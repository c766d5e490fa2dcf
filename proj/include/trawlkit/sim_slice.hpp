// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/sim_slice.hpp
//! Exact slice-partition simulation of trawl processes.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "errors.hpp"
#include "levy.hpp"
#include "rng.hpp"
#include "trawl_geometry.hpp"

namespace trawlkit
{
using Matrix = Eigen::MatrixXd;

//! Addition counts of the fast convolution
struct ConvolutionCount
{
    std::size_t cumsum{0};
    std::size_t diagonal{0};
    std::size_t total() const { return cumsum + diagonal; }
};

/*!
 * Strided convolution: out[l] = sum_ij Y(i, j + l) F(i, j).
 *
 * Output length is Y.cols() - F.cols() + 1; terms are summed row by row,
 * left to right.
 */
inline std::vector<double> naive_convolution(Matrix const& Y, Matrix const& F)
{
    if (Y.rows() != F.rows() || F.cols() > Y.cols() || F.cols() == 0)
        throw ConfigError("naive_convolution: dimension mismatch");
    std::size_t n = Y.cols() - F.cols() + 1;
    std::vector<double> out(n, 0.0);
    for (std::size_t l = 0; l < n; ++l)
    {
        double acc = 0;
        for (Eigen::Index i = 0; i < F.rows(); ++i)
            for (Eigen::Index j = 0; j < F.cols(); ++j)
                acc += Y(i, j + l) * F(i, j);
        out[l] = acc;
    }
    return out;
}

//! I x I filter with ones where i + j >= I + 1 (1-based)
inline Matrix slice_filter(std::size_t I)
{
    Matrix F = Matrix::Zero(I, I);
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j < I; ++j)
            if (i + j + 2 >= I + 1)
                F(i, j) = 1;
    return F;
}

//! Y with I - 1 zero columns on the left
inline Matrix pad_slices(Matrix const& Y)
{
    Matrix P = Matrix::Zero(Y.rows(), Y.rows() - 1 + Y.cols());
    P.rightCols(Y.cols()) = Y;
    return P;
}

/*!
 * Trawl values from an I x k slice matrix.
 *
 * Column cumulative sums from the bottom, then sums along anti-diagonals.
 */
inline std::vector<double> fast_convolution(Matrix Y, ConvolutionCount* count = nullptr)
{
    std::size_t const I = Y.rows(), k = Y.cols();
    ConvolutionCount c;
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = I - 1; i-- > 0;)
        {
            Y(i, j) += Y(i + 1, j);
            ++c.cumsum;
        }
    std::vector<double> X(k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
    {
        std::size_t top = std::min(I, j + 1);
        for (std::size_t i = 0; i < top; ++i)
        {
            X[j] += Y(i, j - i);
            ++c.diagonal;
        }
    }
    if (count)
        *count = c;
    return X;
}

//! Draw the I x k slice matrix of a bounded plan
inline Matrix sample_slice_matrix(SlicePlan const& plan, LevySeed const& seed, RngStream& rng)
{
    TRAWLKIT_REQUIRE(plan.mode == SlicePlan::Mode::bounded, "expected a bounded slice plan");
    Matrix Y = Matrix::Zero(plan.I, plan.k);
    for (std::size_t i = 0; i < plan.I; ++i)
    {
        if (plan.s1[i] > 0)
            Y(i, 0) = SetLawSampler(seed, plan.s1[i])(rng);
        if (plan.s2[i] > 0 && plan.k > 1)
        {
            SetLawSampler s(seed, plan.s2[i]);
            for (std::size_t j = 1; j < plan.k; ++j)
                Y(i, j) = s(rng);
        }
    }
    return Y;
}

inline std::vector<double> simulate_slice_bounded(SlicePlan const& plan, LevySeed const& seed,
                                                  RngStream& rng)
{
    return fast_convolution(sample_slice_matrix(plan, seed, rng));
}

inline std::vector<double> simulate_slice_bounded(TrawlFunction const& trawl,
                                                  LevySeed const& seed, std::size_t k,
                                                  double tau, RngStream& rng)
{
    return simulate_slice_bounded(slice_areas_bounded(trawl, tau, k), seed, rng);
}

//! Outcome of an unbounded slice run with its truncation report
struct SliceRun
{
    std::vector<double> values;
    std::vector<double> dropped_area;  //!< per trawl; empty when exact
    std::vector<ExtendedReal> error_mean;
    std::vector<ExtendedReal> error_var;
};

/*!
 * Area missing from each trawl when rows below n are dropped.
 *
 * Row i (1-based) holds slices shared by exactly i consecutive trawls.
 */
inline std::vector<double> dropped_areas(SlicePlan const& plan, std::size_t n)
{
    std::size_t const k = plan.k;
    std::vector<double> D(k, 0.0);
    for (std::size_t i = n + 1; i <= k; ++i)
    {
        std::size_t len = k - i + 1;
        double first = plan.area(i, 1), last = plan.area(i, len);
        double mid = len > 2 ? plan.area(i, 2) : 0.0;
        for (std::size_t l = 1; l <= k; ++l)
        {
            std::size_t jlo = l >= i ? l - i + 1 : 1;
            std::size_t jhi = std::min(l, len);
            if (jlo > jhi)
                continue;
            double s = 0;
            std::size_t cnt = jhi - jlo + 1;
            if (jlo == 1)
            {
                s += first;
                --cnt;
            }
            if (jhi == len && len > 1)
            {
                s += last;
                --cnt;
            }
            s += double(cnt) * mid;
            D[l - 1] += s;
        }
    }
    return D;
}

//! Smallest row count whose dropped area is at most rel * Leb(A) for every trawl
inline std::size_t choose_truncation_rows(SlicePlan const& plan, double rel = 1e-6)
{
    auto worst = [&](std::size_t n) {
        auto D = dropped_areas(plan, n);
        return D.empty() ? 0.0 : *std::max_element(D.begin(), D.end());
    };
    std::size_t lo = 1, hi = plan.k;
    if (worst(lo) <= rel * plan.total_area)
        return lo;
    while (hi - lo > 1)
    {
        std::size_t mid = (lo + hi) / 2;
        (worst(mid) <= rel * plan.total_area ? hi : lo) = mid;
    }
    return hi;
}

/*!
 * Streaming evaluation of the k x k staircase.
 *
 * Rows are drawn from the bottom up into a running column sum, so memory
 * stays O(k). Row i draws from its own child stream, so truncated and full
 * runs share every kept slice. Rows deeper than n_trunc are skipped and
 * reported.
 */
inline SliceRun simulate_slice_unbounded(SlicePlan const& plan, LevySeed const& seed,
                                         std::optional<std::size_t> n_trunc, RngStream& rng)
{
    TRAWLKIT_REQUIRE(plan.mode == SlicePlan::Mode::unbounded,
                     "expected an unbounded slice plan");
    std::size_t const k = plan.k;
    std::size_t top = k;
    if (n_trunc)
    {
        TRAWLKIT_REQUIRE(*n_trunc >= 1 && *n_trunc <= k,
                         "truncation rows must lie between 1 and k");
        top = *n_trunc;
    }
    SliceRun run;
    run.values.assign(k, 0.0);
    std::vector<double> z(k, 0.0);
    RngStream const base(rng());
    for (std::size_t i = top; i >= 1; --i)
    {
        RngStream row = base.split(i);
        std::size_t len = k - i + 1;
        double first = plan.area(i, 1);
        if (first > 0)
            z[0] += SetLawSampler(seed, first)(row);
        if (len > 2)
        {
            double mid = plan.area(i, 2);
            if (mid > 0)
            {
                SetLawSampler s(seed, mid);
                for (std::size_t j = 1; j + 1 < len; ++j)
                    z[j] += s(row);
            }
        }
        if (len > 1)
        {
            double last = plan.area(i, len);
            if (last > 0)
                z[len - 1] += SetLawSampler(seed, last)(row);
        }
        for (std::size_t l = i; l <= k; ++l)
            run.values[l - 1] += z[l - i];
    }
    if (n_trunc && *n_trunc < k)
    {
        run.dropped_area = dropped_areas(plan, *n_trunc);
        auto mv = set_mean_var(seed, 1.0);
        for (double d : run.dropped_area)
        {
            run.error_mean.push_back(d > 0 ? mv.mean.scaled(d) : ExtendedReal::finite(0));
            run.error_var.push_back(d > 0 ? mv.variance.scaled(d) : ExtendedReal::finite(0));
        }
    }
    return run;
}

inline SliceRun simulate_slice_unbounded(TrawlFunction const& trawl, LevySeed const& seed,
                                         std::size_t k, double tau,
                                         std::optional<std::size_t> n_trunc, RngStream& rng)
{
    return simulate_slice_unbounded(slice_areas_unbounded(trawl, tau, k), seed, n_trunc, rng);
}

//! Exact Gaussian trawl via the Cholesky factor of the overlap covariance
class GaussianCholesky
{
  public:
    GaussianCholesky(TrawlFunction const& trawl, std::size_t k, double tau, double mu,
                     double sigma2)
        : mean_(mu * trawl.total_area())
    {
        TRAWLKIT_REQUIRE(k >= 1 && tau > 0, "need k >= 1 and tau > 0");
        TRAWLKIT_REQUIRE(sigma2 >= 0, "gaussian variance must be nonnegative");
        std::vector<double> c(k);
        for (std::size_t h = 0; h < k; ++h)
            c[h] = sigma2 * (h == 0 ? trawl.total_area() : trawl.tail_integral(-double(h) * tau));
        cov_ = Matrix(k, k);
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t m = 0; m < k; ++m)
                cov_(l, m) = c[l > m ? l - m : m - l];
        Eigen::LLT<Matrix> llt(cov_);
        if (llt.info() != Eigen::Success)
        {
            Matrix jit = cov_;
            jit.diagonal().array() += 1e-12 * std::max(c[0], 1e-300);
            llt.compute(jit);
            if (llt.info() != Eigen::Success)
                throw NumericError("trawl covariance is not numerically positive semidefinite");
        }
        H_ = llt.matrixL();
    }

    Matrix const& covariance() const { return cov_; }

    std::vector<double> operator()(RngStream& rng) const
    {
        Eigen::VectorXd z(H_.rows());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            z[i] = rng.normal();
        Eigen::VectorXd x = H_.triangularView<Eigen::Lower>() * z;
        std::vector<double> out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
            out[i] = x[i] + mean_;
        return out;
    }

  private:
    double mean_;
    Matrix cov_, H_;
};

inline std::vector<double> simulate_gaussian_cholesky(TrawlFunction const& trawl, std::size_t k,
                                                      double tau, double mu, double sigma2,
                                                      RngStream& rng)
{
    return GaussianCholesky(trawl, k, tau, mu, sigma2)(rng);
}

//! Bounded or unbounded slice simulation by the trawl's support
inline SliceRun simulate_slice(TrawlFunction const& trawl, LevySeed const& seed, std::size_t k,
                               double tau, std::optional<std::size_t> n_trunc, RngStream& rng)
{
    if (trawl.bounded())
        return {simulate_slice_bounded(trawl, seed, k, tau, rng), {}, {}, {}};
    return simulate_slice_unbounded(trawl, seed, k, tau, n_trunc, rng);
}

}  // namespace trawlkit
