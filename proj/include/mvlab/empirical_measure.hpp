#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "mvlab/core.hpp"

namespace mvlab {

/// Uniform-weight atomic measure (1/N) sum of delta_{x_i} over an N x d point
/// set. Immutable after construction; copies share the lazy moment cache.
///
/// Low-order moments (componentwise mean and second moment, mean squared norm)
/// are computed eagerly so the simulation hot path never touches the cache
/// lock. Higher moments are cached on first use.
class EmpiricalMeasure {
public:
    EmpiricalMeasure(std::vector<double> points_row_major, int n_points, int dim)
        : points_(std::make_shared<const std::vector<double>>(std::move(points_row_major))),
          n_(n_points),
          d_(dim),
          cache_(std::make_shared<Cache>()) {
        require(n_ >= 1, "EmpiricalMeasure: need at least one support point");
        require(d_ >= 1, "EmpiricalMeasure: dimension must be positive");
        require(points_->size() == static_cast<std::size_t>(n_) * d_,
                "EmpiricalMeasure: point buffer size does not match N*d");
        require(all_finite(points_->data(), points_->size()),
                "EmpiricalMeasure: non-finite support point");
        mean_.assign(d_, 0.0);
        second_.assign(d_, 0.0);
        const double* p = points_->data();
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < d_; ++k) {
                double v = p[static_cast<std::size_t>(i) * d_ + k];
                mean_[k] += v;
                second_[k] += v * v;
            }
        norm2_sq_ = 0.0;
        for (int k = 0; k < d_; ++k) {
            mean_[k] /= n_;
            second_[k] /= n_;
            norm2_sq_ += second_[k];
        }
    }

    /// Single atom delta_x.
    static EmpiricalMeasure dirac(std::span<const double> x) {
        return EmpiricalMeasure(std::vector<double>(x.begin(), x.end()), 1,
                                static_cast<int>(x.size()));
    }
    static EmpiricalMeasure dirac1d(double x) { return dirac(std::span<const double>(&x, 1)); }

    static EmpiricalMeasure from_samples_1d(std::vector<double> xs) {
        int n = static_cast<int>(xs.size());
        return EmpiricalMeasure(std::move(xs), n, 1);
    }

    int size() const { return n_; }
    int dim() const { return d_; }

    std::span<const double> point(int i) const {
        return std::span<const double>(points_->data() + static_cast<std::size_t>(i) * d_, d_);
    }
    std::span<const double> data() const { return std::span<const double>(*points_); }

    double mean(int comp = 0) const { return mean_.at(comp); }
    double second_moment(int comp = 0) const { return second_.at(comp); }
    /// int |x|^2 mu(dx)
    double norm2_sq() const { return norm2_sq_; }

    /// int x_comp^k mu(dx), k <= 10.
    double component_moment(int comp, int order) const {
        require(comp >= 0 && comp < d_, "component_moment: component out of range");
        require(order >= 0 && order <= 10, "component_moment: order must be in [0, 10]");
        if (order == 0) return 1.0;
        if (order == 1) return mean_[comp];
        if (order == 2) return second_[comp];
        return cached(CacheKey{comp, order, false});
    }

    /// int |x|^k mu(dx), k <= 10.
    double abs_moment(int order) const {
        require(order >= 0 && order <= 10, "abs_moment: order must be in [0, 10]");
        if (order == 0) return 1.0;
        if (order == 2) return norm2_sq_;
        return cached(CacheKey{-1, order, true});
    }

private:
    struct CacheKey {
        int comp;
        int order;
        bool abs;
        bool operator<(const CacheKey& o) const {
            return std::tie(comp, order, abs) < std::tie(o.comp, o.order, o.abs);
        }
    };
    struct Cache {
        std::mutex mu;
        std::map<CacheKey, double> values;
    };

    double cached(const CacheKey& key) const {
        {
            std::lock_guard<std::mutex> lock(cache_->mu);
            auto it = cache_->values.find(key);
            if (it != cache_->values.end()) return it->second;
        }
        double v = compute(key);
        std::lock_guard<std::mutex> lock(cache_->mu);
        cache_->values.emplace(key, v);
        return v;
    }

    double compute(const CacheKey& key) const {
        const double* p = points_->data();
        double acc = 0.0;
        for (int i = 0; i < n_; ++i) {
            double base;
            if (key.abs) {
                double s = 0.0;
                for (int k = 0; k < d_; ++k) {
                    double v = p[static_cast<std::size_t>(i) * d_ + k];
                    s += v * v;
                }
                base = std::sqrt(s);
            } else {
                base = p[static_cast<std::size_t>(i) * d_ + key.comp];
            }
            double pw = 1.0;
            for (int j = 0; j < key.order; ++j) pw *= base;
            acc += pw;
        }
        return acc / n_;
    }

    std::shared_ptr<const std::vector<double>> points_;
    int n_;
    int d_;
    std::vector<double> mean_;
    std::vector<double> second_;
    double norm2_sq_;
    std::shared_ptr<Cache> cache_;
};

/// Moment query forms accepted by moment().
struct MomentSpec {
    enum class Kind { MeanComponent, SecondMomentComponent, NormSq, AbsPower, ComponentPower };
    Kind kind;
    int component = 0;
    int order = 2;

    static MomentSpec mean(int comp = 0) { return {Kind::MeanComponent, comp, 1}; }
    static MomentSpec second(int comp = 0) { return {Kind::SecondMomentComponent, comp, 2}; }
    static MomentSpec norm_sq() { return {Kind::NormSq, 0, 2}; }
    static MomentSpec abs_power(int k) { return {Kind::AbsPower, 0, k}; }
    static MomentSpec component_power(int comp, int k) { return {Kind::ComponentPower, comp, k}; }
};

inline double moment(const EmpiricalMeasure& mu, const MomentSpec& spec) {
    switch (spec.kind) {
        case MomentSpec::Kind::MeanComponent: return mu.mean(spec.component);
        case MomentSpec::Kind::SecondMomentComponent: return mu.second_moment(spec.component);
        case MomentSpec::Kind::NormSq: return mu.norm2_sq();
        case MomentSpec::Kind::AbsPower: return mu.abs_moment(spec.order);
        case MomentSpec::Kind::ComponentPower:
            return mu.component_moment(spec.component, spec.order);
    }
    throw contract_error("moment: unsupported spec");
}

}  // namespace mvlab
