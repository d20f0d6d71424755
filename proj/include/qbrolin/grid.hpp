#pragma once

// Node-centered square rasters on a slice plane C_I, coordinates (alpha, beta).

#include <cstdint>
#include <vector>

#include "qbrolin/quaternion.hpp"

namespace qbrolin {

class SliceGrid {
public:
    SliceGrid() = default;
    /// Square cells of side h. alpha_max and beta_max are snapped to the last
    /// node so that h divides both spans exactly.
    SliceGrid(double alpha_min, double alpha_max, double beta_min, double beta_max, double h);
    /// Centered square [c - half, c + half]^2 with spacing h.
    static SliceGrid centered(cplx center, double half_width, double h);

    double alpha_min() const { return a0_; }
    double alpha_max() const { return a0_ + (nx_ - 1) * h_; }
    double beta_min() const { return b0_; }
    double beta_max() const { return b0_ + (ny_ - 1) * h_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double h() const { return h_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

    std::size_t index(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(ix);
    }
    cplx node(int ix, int iy) const { return {a0_ + ix * h_, b0_ + iy * h_}; }
    cplx node(std::size_t idx) const {
        return node(static_cast<int>(idx % static_cast<std::size_t>(nx_)),
                    static_cast<int>(idx / static_cast<std::size_t>(nx_)));
    }
    bool operator==(const SliceGrid&) const = default;

private:
    double a0_ = 0, b0_ = 0, h_ = 1;
    int nx_ = 1, ny_ = 1;
};

struct GridField {
    SliceGrid grid;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;  // 1 marks a singular or excluded node

    GridField() = default;
    explicit GridField(const SliceGrid& g, double fill = 0.0)
        : grid(g), values(g.size(), fill), mask(g.size(), 0) {}

    double& at(int ix, int iy) { return values[grid.index(ix, iy)]; }
    double at(int ix, int iy) const { return values[grid.index(ix, iy)]; }
    bool masked(int ix, int iy) const { return mask[grid.index(ix, iy)] != 0; }
};

}  // namespace qbrolin
