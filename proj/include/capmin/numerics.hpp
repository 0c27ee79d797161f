#pragma once

#include "errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <queue>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace capmin {

namespace detail {

struct Rule21 {
    std::array<double, 11> xk{}, wk{};
    std::array<double, 5> wg{};
    Rule21()
    {
        const auto& ak = boost::math::quadrature::gauss_kronrod<double, 21>::abscissa();
        const auto& bk = boost::math::quadrature::gauss_kronrod<double, 21>::weights();
        const auto& bg = boost::math::quadrature::gauss<double, 10>::weights();
        std::copy(ak.begin(), ak.end(), xk.begin());
        std::copy(bk.begin(), bk.end(), wk.begin());
        std::copy(bg.begin(), bg.end(), wg.begin());
    }
};

inline const Rule21& rule21()
{
    static const Rule21 r;
    return r;
}

template <std::size_t N>
struct Panel {
    double a, b;
    std::array<double, N> kron, err, l1;
    double worst;
};

// Kronrod 21 / Gauss 10 on one panel. Gauss nodes are the odd Kronrod nodes.
template <std::size_t N, class F>
Panel<N> gk21(F& f, double a, double b, const std::array<double, N>& scale)
{
    const auto& r = rule21();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    Panel<N> p{a, b, {}, {}, {}, 0.0};
    std::array<double, N> gauss{};
    auto add = [&](const std::array<double, N>& v, double wk, double wg) {
        for (std::size_t k = 0; k < N; ++k) {
            p.kron[k] += wk * v[k];
            p.l1[k] += wk * std::abs(v[k]);
            gauss[k] += wg * v[k];
        }
    };
    // boost stores the centre first; the 10-point Gauss nodes are the odd Kronrod ones
    add(f(c), r.wk[0], 0.0);
    for (std::size_t i = 1; i < r.xk.size(); ++i) {
        const double wg = (i % 2 == 1) ? r.wg[(i - 1) / 2] : 0.0;
        add(f(c - h * r.xk[i]), r.wk[i], wg);
        add(f(c + h * r.xk[i]), r.wk[i], wg);
    }
    for (std::size_t k = 0; k < N; ++k) {
        p.kron[k] *= h;
        p.l1[k] *= std::abs(h);
        p.err[k] = std::abs(p.kron[k] - gauss[k] * h);
        p.worst = std::max(p.worst, p.err[k] / scale[k]);
    }
    return p;
}

} // namespace detail

struct QuadOptions {
    double rel_tol = 1e-13;
    double abs_tol = 0.0;
    int max_panels = 3000;
};

// Globally adaptive Gauss-Kronrod for vector integrands; components share the
// panel tree. Each component k is converged when err_k <= max(abs, rel*L1_k).
template <std::size_t N, class F>
std::array<double, N> integrate_n(F&& f, double a, double b, const QuadOptions& opt = {})
{
    std::array<double, N> total{};
    if (a == b)
        return total;
    if (a > b) {
        total = integrate_n<N>(f, b, a, opt);
        for (auto& v : total)
            v = -v;
        return total;
    }
    using P = detail::Panel<N>;
    auto cmp = [](const P& x, const P& y) { return x.worst < y.worst; };
    std::priority_queue<P, std::vector<P>, decltype(cmp)> heap(cmp);
    std::array<double, N> scale;
    scale.fill(1.0);
    // panels are ranked by error relative to the whole-range L1 of each component
    P root = detail::gk21<N>(f, a, b, scale);
    for (std::size_t k = 0; k < N; ++k)
        scale[k] = std::max(root.l1[k], std::numeric_limits<double>::min());
    heap.push(root);

    auto sums = [&](std::array<double, N>& val, std::array<double, N>& err, std::array<double, N>& l1) {
        val.fill(0.0);
        err.fill(0.0);
        l1.fill(0.0);
        auto copy = heap;
        for (; !copy.empty(); copy.pop())
            for (std::size_t k = 0; k < N; ++k) {
                val[k] += copy.top().kron[k];
                err[k] += copy.top().err[k];
                l1[k] += copy.top().l1[k];
            }
        for (std::size_t k = 0; k < N; ++k)
            if (!std::isfinite(val[k]))
                throw QuadratureError("non-finite integrand value");
    };
    auto within = [&](const std::array<double, N>& err, const std::array<double, N>& l1, double rel) {
        for (std::size_t k = 0; k < N; ++k)
            if (err[k] > std::max(opt.abs_tol, rel * l1[k]))
                return false;
        return true;
    };

    std::array<double, N> err, l1;
    int panels = 1;
    for (int check = 1;; check = check * 2) {
        sums(total, err, l1);
        if (within(err, l1, opt.rel_tol))
            return total;
        if (panels >= opt.max_panels)
            break;
        // refine the worst panels before summing again
        for (int i = 0; i < check && panels < opt.max_panels; ++i) {
            P worst = heap.top();
            const double mid = 0.5 * (worst.a + worst.b);
            if (!(mid > worst.a && mid < worst.b)) {
                panels = opt.max_panels;
                break;
            }
            heap.pop();
            heap.push(detail::gk21<N>(f, worst.a, mid, scale));
            heap.push(detail::gk21<N>(f, mid, worst.b, scale));
            ++panels;
        }
    }
    if (!within(err, l1, 1e3 * opt.rel_tol)) {
        double rel = 0;
        for (std::size_t k = 0; k < N; ++k)
            rel = std::max(rel, err[k] / std::max(l1[k], std::numeric_limits<double>::min()));
        throw QuadratureError("adaptive quadrature did not converge (relative error estimate "
                              + std::to_string(rel) + ")");
    }
    return total;
}

template <class F>
double integrate(F&& f, double a, double b, const QuadOptions& opt = {})
{
    auto g = [&f](double x) { return std::array<double, 1>{f(x)}; };
    return integrate_n<1>(g, a, b, opt)[0];
}

// Bracketed root of f on [a,b] (TOMS 748). Stops when the bracket is below
// xtol relative, or as soon as |f| <= ftol.
template <class F>
double find_root(F&& f, double a, double b, double fa, double fb,
                 double xtol = 4 * std::numeric_limits<double>::epsilon(), double ftol = 0.0,
                 std::uintmax_t max_iter = 200)
{
    if (fa == 0)
        return a;
    if (fb == 0)
        return b;
    if ((fa > 0) == (fb > 0))
        throw NoBracket("root not bracketed");
    if (std::abs(fa) <= ftol)
        return a;
    if (std::abs(fb) <= ftol)
        return b;
    if (a > b) {
        std::swap(a, b);
        std::swap(fa, fb);
    }
    bool hit = false;
    double hit_x = 0.0;
    auto g = [&](double x) {
        double v = f(x);
        if (!hit && std::abs(v) <= ftol) {
            hit = true;
            hit_x = x;
        }
        return v;
    };
    auto tol = [&](double x, double y) {
        return hit || std::abs(x - y) <= xtol * std::min(std::abs(x), std::abs(y))
            || std::abs(x - y) <= std::numeric_limits<double>::min();
    };
    std::uintmax_t it = max_iter;
    auto r = boost::math::tools::toms748_solve(g, a, b, fa, fb, tol, it);
    if (hit)
        return hit_x;
    return 0.5 * (r.first + r.second);
}

template <class F>
double find_root(F&& f, double a, double b, double xtol = 4 * std::numeric_limits<double>::epsilon())
{
    return find_root(f, a, b, f(a), f(b), xtol);
}

// Chebyshev-Lobatto points on [0,1], ascending, endpoints included.
inline std::vector<double> lobatto01(std::size_t n)
{
    std::vector<double> p(n);
    if (n == 1) {
        p[0] = 0.0;
        return p;
    }
    for (std::size_t i = 0; i < n; ++i)
        p[i] = 0.5 * (1.0 - std::cos(M_PI * double(i) / double(n - 1)));
    p.front() = 0.0;
    p.back() = 1.0;
    return p;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n)
{
    std::vector<double> v(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? lo : std::exp(a + (b - a) * double(i) / double(n - 1));
    if (n > 1) {
        v.front() = lo;
        v.back() = hi;
    }
    return v;
}

// log(sinh x) for x > 0
inline double log_sinh(double x)
{
    if (x < 1.0)
        return std::log(std::sinh(x));
    return x + std::log1p(-std::exp(-2 * x)) - M_LN2;
}

inline double log_cosh(double x)
{
    x = std::abs(x);
    return x + std::log1p(std::exp(-2 * x)) - M_LN2;
}

inline double softplus(double x)
{
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline unsigned thread_count()
{
    if (const char* env = std::getenv("CAPMIN_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1)
            return unsigned(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Evaluates f(0..n-1) on up to thread_count() threads; results are placed by
// index so the output does not depend on scheduling.
template <class F>
auto parallel_map(std::size_t n, F&& f) -> std::vector<decltype(f(std::size_t{}))>
{
    using T = decltype(f(std::size_t{}));
    std::vector<T> out(n);
    std::vector<std::exception_ptr> errs(n);
    const unsigned nt = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1));
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = f(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                out[i] = f(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < nt; ++t)
            pool.emplace_back(work);
    }
    for (auto& e : errs)
        if (e)
            std::rethrow_exception(e);
    return out;
}

} // namespace capmin
