#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stage/core/math.hpp"

namespace stage::pathfind {

struct Rect {
    Vec2 min;
    Vec2 max;

    bool degenerate() const { return !(max.x > min.x && max.z > min.z); }
    bool contains(Vec2 p) const { return p.x >= min.x && p.x <= max.x && p.z >= min.z && p.z <= max.z; }
    Vec2 center() const { return 0.5 * (min + max); }

    friend bool operator==(const Rect&, const Rect&) = default;
};

class PathError : public std::runtime_error {
public:
    enum class Code { EmptyMesh, BadMesh, InvalidEndpoint, NoPath };

    PathError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

// Uniform walkability grid over stage D. Cell (col, row) spans
// [origin.x + col*cell, +cell) x [origin.z + row*cell, +cell); index = row*width + col.
// Cells connect 8-ways; a diagonal move needs both orthogonal neighbours walkable.
class NavMesh {
public:
    // Throws PathError(BadMesh) on a non-positive cell size, empty dimensions or
    // a walkability vector of the wrong size.
    NavMesh(Vec2 origin, double cell_size, std::size_t width, std::size_t height, std::vector<std::uint8_t> walkable);

    Vec2 origin() const { return origin_; }
    double cell_size() const { return cell_size_; }
    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t cell_count() const { return walkable_.size(); }
    std::size_t walkable_count() const;

    bool walkable(std::size_t cell) const { return walkable_[cell] != 0; }
    std::size_t index(std::size_t col, std::size_t row) const { return row * width_ + col; }
    std::size_t col_of(std::size_t cell) const { return cell % width_; }
    std::size_t row_of(std::size_t cell) const { return cell / width_; }
    Vec2 center(std::size_t cell) const;

    // Cell containing `p`, or none when p lies outside the grid.
    std::optional<std::size_t> cell_at(Vec2 p) const;

    // Walkable neighbours of `cell` with their step kind (true = diagonal).
    template <typename Fn>
    void for_each_neighbor(std::size_t cell, Fn&& fn) const;

private:
    Vec2 origin_;
    double cell_size_;
    std::size_t width_;
    std::size_t height_;
    std::vector<std::uint8_t> walkable_;
};

template <typename Fn>
void NavMesh::for_each_neighbor(std::size_t cell, Fn&& fn) const {
    const auto col = static_cast<std::ptrdiff_t>(col_of(cell));
    const auto row = static_cast<std::ptrdiff_t>(row_of(cell));
    const auto w = static_cast<std::ptrdiff_t>(width_);
    const auto h = static_cast<std::ptrdiff_t>(height_);
    auto open = [&](std::ptrdiff_t c, std::ptrdiff_t r) {
        return c >= 0 && r >= 0 && c < w && r < h && walkable_[static_cast<std::size_t>(r * w + c)] != 0;
    };
    for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
        for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const std::ptrdiff_t c = col + dc;
            const std::ptrdiff_t r = row + dr;
            if (!open(c, r)) continue;
            const bool diagonal = dr != 0 && dc != 0;
            if (diagonal && !(open(col + dc, row) && open(col, row + dr))) continue;
            fn(static_cast<std::size_t>(r * w + c), diagonal);
        }
    }
}

// Cell walkable iff its square does not overlap any obstacle (touching edges is fine).
// Throws PathError(EmptyMesh) when nothing is walkable.
NavMesh build_navmesh(const Rect& bounds, std::span<const Rect> obstacles, double cell_size);

// Exact grid path length: straight + diagonal * sqrt(2) cell steps.
struct StepCount {
    std::int64_t straight = 0;
    std::int64_t diagonal = 0;

    double cells() const;  // straight + diagonal * sqrt(2)

    friend bool operator==(const StepCount&, const StepCount&) = default;
    friend std::strong_ordering operator<=>(const StepCount& a, const StepCount& b);
};

struct Path {
    std::vector<Vec2> waypoints;     // start, cell centers, goal (duplicates dropped)
    std::vector<std::size_t> cells;  // traversed cells, start cell to goal cell
    StepCount steps;                 // cell-to-cell moves between start and goal cells
    double total_cost = 0.0;         // meters, including the legs to and from cell centers
};

struct PathOptions {
    // Checks the heuristic against true remaining cost at every expanded node and
    // throws std::logic_error on a violation. Costs an extra reverse search.
    bool verify_heuristic = false;
};

// A* over cell centers with a Euclidean heuristic. Ties on f are broken by lower
// heuristic, then lower cell index. Throws PathError(InvalidEndpoint) when start or
// goal is outside the grid or unwalkable, PathError(NoPath) when no route exists.
Path find_path(const NavMesh& mesh, Vec2 start, Vec2 goal, const PathOptions& options = {});

}  // namespace stage::pathfind
