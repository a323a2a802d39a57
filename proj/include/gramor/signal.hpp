#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gramor/errors.hpp"
#include "gramor/matrix.hpp"

namespace gramor {

/// Named closed-form scalar signals usable from the CLI and tests.
inline const std::map<std::string, std::function<double(double)>>& signal_registry() {
    static const std::map<std::string, std::function<double(double)>> reg = {
        {"paper-default", [](double t) { return std::exp(-0.5 * t) * std::sin(10.0 * t); }},
        {"zero", [](double) { return 0.0; }},
        {"one", [](double) { return 1.0; }},
    };
    return reg;
}

/// Deterministic control signal on [0, T]. Each channel is either a named
/// closed form from the registry or a piecewise-linear table.
class InputSignal {
public:
    using Fn = std::function<double(double)>;

    static InputSignal named(const std::string& name, double horizon) {
        auto it = signal_registry().find(name);
        if (it == signal_registry().end())
            throw ArgumentError("unknown signal '" + name + "'");
        InputSignal u(horizon);
        u.channels_.push_back(Channel{it->second, {}, {}});
        return u;
    }

    static InputSignal closedForm(Fn f, double horizon) {
        InputSignal u(horizon);
        u.channels_.push_back(Channel{std::move(f), {}, {}});
        return u;
    }

    /// Piecewise-linear table; grid must be increasing and cover [0, horizon].
    /// values has one column per channel.
    static InputSignal table(Vector grid, Matrix values, double horizon) {
        if (grid.size() < 2 || values.rows() != grid.size())
            throw ArgumentError("signal table needs >= 2 rows and matching grid length");
        for (Index i = 1; i < grid.size(); ++i)
            if (!(grid(i) > grid(i - 1)))
                throw ArgumentError("signal table grid must be strictly increasing");
        InputSignal u(horizon);
        for (Index c = 0; c < values.cols(); ++c)
            u.channels_.push_back(Channel{nullptr, grid, values.col(c)});
        return u;
    }

    static InputSignal zero(int channels, double horizon) {
        InputSignal u(horizon);
        for (int c = 0; c < channels; ++c)
            u.channels_.push_back(Channel{[](double) { return 0.0; }, {}, {}});
        return u;
    }

    double horizon() const { return horizon_; }
    Index channels() const { return static_cast<Index>(channels_.size()); }

    double eval(Index channel, double t) const {
        const Channel& ch = channels_[static_cast<std::size_t>(channel)];
        double v;
        if (ch.fn) {
            v = ch.fn(t);
        } else {
            // clamp-and-interpolate on the table
            const Vector& g = ch.grid;
            if (t <= g(0)) {
                v = ch.values(0);
            } else if (t >= g(g.size() - 1)) {
                v = ch.values(g.size() - 1);
            } else {
                auto hi = std::upper_bound(g.data(), g.data() + g.size(), t) - g.data();
                const double t0 = g(hi - 1), t1 = g(hi);
                const double w = (t - t0) / (t1 - t0);
                v = (1.0 - w) * ch.values(hi - 1) + w * ch.values(hi);
            }
        }
        if (!std::isfinite(v))
            throw EvaluationError("signal evaluation not finite at t=" + std::to_string(t));
        return v;
    }

    Vector operator()(double t) const {
        Vector v(channels());
        for (Index c = 0; c < channels(); ++c) v(c) = eval(c, t);
        return v;
    }

    /// Broadcast a single-channel signal to m identical channels (input tying).
    InputSignal tied(Index m) const {
        if (channels() != 1)
            throw ArgumentError("tied() requires a single-channel signal");
        InputSignal u(horizon_);
        for (Index c = 0; c < m; ++c) u.channels_.push_back(channels_[0]);
        return u;
    }

    InputSignal scaled(double c) const {
        InputSignal u(horizon_);
        for (const Channel& ch : channels_) {
            if (ch.fn) {
                auto f = ch.fn;
                u.channels_.push_back(Channel{[f, c](double t) { return c * f(t); }, {}, {}});
            } else {
                u.channels_.push_back(Channel{nullptr, ch.grid, c * ch.values});
            }
        }
        return u;
    }

    /// Keep only the listed channels (e.g. the u^0 subvector), zeroing the rest.
    InputSignal masked(const std::vector<bool>& keep) const {
        InputSignal u(horizon_);
        for (std::size_t c = 0; c < channels_.size(); ++c) {
            if (c < keep.size() && keep[c])
                u.channels_.push_back(channels_[c]);
            else
                u.channels_.push_back(Channel{[](double) { return 0.0; }, {}, {}});
        }
        return u;
    }

private:
    explicit InputSignal(double horizon) : horizon_(horizon) {
        if (!(horizon > 0.0)) throw ArgumentError("signal horizon must be positive");
    }

    struct Channel {
        Fn fn;  // null for tables
        Vector grid;
        Vector values;
    };

    double horizon_;
    std::vector<Channel> channels_;
};

namespace detail {

inline double simpson_l2sq(const InputSignal& u, Index intervals) {
    const double T = u.horizon();
    const double h = T / static_cast<double>(intervals);
    auto g = [&](Index k) {
        const double t = (k == intervals) ? T : h * static_cast<double>(k);
        double s = 0.0;
        for (Index c = 0; c < u.channels(); ++c) {
            const double v = u.eval(c, t);
            s += v * v;
        }
        return s;
    };
    double acc = g(0) + g(intervals);
    for (Index k = 1; k < intervals; ++k) acc += (k % 2 ? 4.0 : 2.0) * g(k);
    return acc * h / 3.0;
}

}  // namespace detail

/// L2([0,T]) norm of the signal, (int ||u(s)||_2^2 ds)^{1/2}, by composite
/// Simpson quadrature refined until two levels agree to relative 1e-8.
inline double input_l2_norm(const InputSignal& u) {
    Index intervals = 4096;  // >= 4097 grid points
    double prev = detail::simpson_l2sq(u, intervals);
    for (int level = 0; level < 12; ++level) {
        intervals *= 2;
        const double cur = detail::simpson_l2sq(u, intervals);
        if (std::abs(cur - prev) <= 1e-8 * std::abs(cur)) return std::sqrt(std::max(cur, 0.0));
        prev = cur;
    }
    throw EvaluationError("input_l2_norm did not converge to relative 1e-8");
}

}  // namespace gramor
