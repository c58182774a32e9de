#include "stage/pathfind/navmesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace stage::pathfind {

NavMesh::NavMesh(Vec2 origin, double cell_size, std::size_t width, std::size_t height,
                 std::vector<std::uint8_t> walkable)
    : origin_(origin), cell_size_(cell_size), width_(width), height_(height), walkable_(std::move(walkable)) {
    if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) {
        throw PathError(PathError::Code::BadMesh, "cell size must be positive");
    }
    if (width_ == 0 || height_ == 0) throw PathError(PathError::Code::BadMesh, "mesh dimensions must be at least 1");
    if (walkable_.size() != width_ * height_) {
        throw PathError(PathError::Code::BadMesh, "walkability grid has " + std::to_string(walkable_.size()) +
                                                      " cells, expected " + std::to_string(width_ * height_));
    }
}

std::size_t NavMesh::walkable_count() const {
    return static_cast<std::size_t>(std::count_if(walkable_.begin(), walkable_.end(), [](auto w) { return w != 0; }));
}

Vec2 NavMesh::center(std::size_t cell) const {
    return {origin_.x + (static_cast<double>(col_of(cell)) + 0.5) * cell_size_,
            origin_.z + (static_cast<double>(row_of(cell)) + 0.5) * cell_size_};
}

std::optional<std::size_t> NavMesh::cell_at(Vec2 p) const {
    const double u = (p.x - origin_.x) / cell_size_;
    const double v = (p.z - origin_.z) / cell_size_;
    const auto w = static_cast<double>(width_);
    const auto h = static_cast<double>(height_);
    constexpr double kEdge = 1e-9;
    if (!(u >= -kEdge && v >= -kEdge && u <= w + kEdge && v <= h + kEdge)) return std::nullopt;
    // points on the far edge belong to the last row/column
    const auto col = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, w - 1.0));
    const auto row = static_cast<std::size_t>(std::clamp(std::floor(v), 0.0, h - 1.0));
    return index(col, row);
}

NavMesh build_navmesh(const Rect& bounds, std::span<const Rect> obstacles, double cell_size) {
    if (!(cell_size > 0.0)) throw PathError(PathError::Code::BadMesh, "cell size must be positive");
    if (bounds.degenerate()) throw PathError(PathError::Code::BadMesh, "stage bounds are degenerate");

    auto cells_along = [cell_size](double extent) {
        const double n = extent / cell_size;
        const double r = std::round(n);
        return static_cast<std::size_t>(std::abs(n - r) < 1e-9 ? r : std::ceil(n));
    };
    const std::size_t width = cells_along(bounds.max.x - bounds.min.x);
    const std::size_t height = cells_along(bounds.max.z - bounds.min.z);

    constexpr double kOverlap = 1e-9;
    std::vector<std::uint8_t> walkable(width * height, 1);
    for (std::size_t row = 0; row < height; ++row) {
        for (std::size_t col = 0; col < width; ++col) {
            const double x0 = bounds.min.x + static_cast<double>(col) * cell_size;
            const double z0 = bounds.min.z + static_cast<double>(row) * cell_size;
            const double x1 = x0 + cell_size;
            const double z1 = z0 + cell_size;
            for (const Rect& o : obstacles) {
                const double ox = std::min(x1, o.max.x) - std::max(x0, o.min.x);
                const double oz = std::min(z1, o.max.z) - std::max(z0, o.min.z);
                if (ox > kOverlap && oz > kOverlap) {
                    walkable[row * width + col] = 0;
                    break;
                }
            }
        }
    }
    NavMesh mesh(bounds.min, cell_size, width, height, std::move(walkable));
    if (mesh.walkable_count() == 0) throw PathError(PathError::Code::EmptyMesh, "no walkable cell on the stage");
    return mesh;
}

double StepCount::cells() const {
    return static_cast<double>(straight) + static_cast<double>(diagonal) * std::numbers::sqrt2;
}

std::strong_ordering operator<=>(const StepCount& a, const StepCount& b) {
    // sign of x + y*sqrt(2) with x = a.straight - b.straight, y = a.diagonal - b.diagonal
    const std::int64_t x = a.straight - b.straight;
    const std::int64_t y = a.diagonal - b.diagonal;
    if (x == 0 && y == 0) return std::strong_ordering::equal;
    if (x >= 0 && y >= 0) return std::strong_ordering::greater;
    if (x <= 0 && y <= 0) return std::strong_ordering::less;
    const std::int64_t x2 = x * x;
    const std::int64_t y2 = 2 * y * y;
    if (x > 0) return x2 > y2 ? std::strong_ordering::greater : std::strong_ordering::less;
    return y2 > x2 ? std::strong_ordering::greater : std::strong_ordering::less;
}

namespace {

struct OpenEntry {
    double f;
    double h;
    std::size_t cell;
    StepCount g;
};

// min-heap on (f, h, cell)
struct OpenAfter {
    bool operator()(const OpenEntry& a, const OpenEntry& b) const {
        if (a.f != b.f) return a.f > b.f;
        if (a.h != b.h) return a.h > b.h;
        return a.cell > b.cell;
    }
};

StepCount advance(StepCount s, bool diagonal) {
    if (diagonal) ++s.diagonal;
    else ++s.straight;
    return s;
}

// True remaining grid cost from every cell to `goal`, in cells.
std::vector<double> reverse_costs(const NavMesh& mesh, std::size_t goal) {
    std::vector<std::optional<StepCount>> best(mesh.cell_count());
    using Item = std::pair<StepCount, std::size_t>;
    auto after = [](const Item& a, const Item& b) { return a.first > b.first; };
    std::priority_queue<Item, std::vector<Item>, decltype(after)> open(after);
    best[goal] = StepCount{};
    open.push({StepCount{}, goal});
    while (!open.empty()) {
        auto [g, cell] = open.top();
        open.pop();
        if (g > *best[cell]) continue;
        mesh.for_each_neighbor(cell, [&](std::size_t next, bool diagonal) {
            const StepCount ng = advance(g, diagonal);
            if (!best[next] || ng < *best[next]) {
                best[next] = ng;
                open.push({ng, next});
            }
        });
    }
    std::vector<double> out(mesh.cell_count(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (best[i]) out[i] = best[i]->cells();
    }
    return out;
}

}  // namespace

Path find_path(const NavMesh& mesh, Vec2 start, Vec2 goal, const PathOptions& options) {
    const auto start_cell = mesh.cell_at(start);
    const auto goal_cell = mesh.cell_at(goal);
    if (!start_cell || !mesh.walkable(*start_cell)) {
        throw PathError(PathError::Code::InvalidEndpoint, "start is outside the walkable stage");
    }
    if (!goal_cell || !mesh.walkable(*goal_cell)) {
        throw PathError(PathError::Code::InvalidEndpoint, "goal is outside the walkable stage");
    }

    Path path;
    if (*start_cell == *goal_cell) {
        path.cells = {*start_cell};
        path.waypoints = {start};
        if (!(goal == start)) path.waypoints.push_back(goal);
        path.total_cost = distance(start, goal);
        return path;
    }

    const Vec2 goal_center = mesh.center(*goal_cell);
    const double cell = mesh.cell_size();
    // heuristic in cells, matching the unit of StepCount::cells()
    auto heuristic = [&](std::size_t c) { return distance(mesh.center(c), goal_center) / cell; };

    std::vector<double> true_remaining;
    if (options.verify_heuristic) true_remaining = reverse_costs(mesh, *goal_cell);

    std::vector<std::optional<StepCount>> best(mesh.cell_count());
    std::vector<std::size_t> parent(mesh.cell_count(), std::numeric_limits<std::size_t>::max());
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenAfter> open;
    best[*start_cell] = StepCount{};
    {
        const double h = heuristic(*start_cell);
        open.push({h, h, *start_cell, StepCount{}});
    }

    bool found = false;
    while (!open.empty()) {
        const OpenEntry top = open.top();
        open.pop();
        if (top.g != *best[top.cell]) continue;  // stale entry
        if (options.verify_heuristic && top.h > true_remaining[top.cell] + 1e-9) {
            throw std::logic_error("heuristic overestimates at cell " + std::to_string(top.cell));
        }
        if (top.cell == *goal_cell) {
            found = true;
            break;
        }
        mesh.for_each_neighbor(top.cell, [&](std::size_t next, bool diagonal) {
            const StepCount ng = advance(top.g, diagonal);
            if (best[next] && !(ng < *best[next])) return;
            best[next] = ng;
            parent[next] = top.cell;
            const double h = heuristic(next);
            open.push({ng.cells() + h, h, next, ng});
        });
    }
    if (!found) throw PathError(PathError::Code::NoPath, "no route between start and goal");

    for (std::size_t c = *goal_cell; c != *start_cell; c = parent[c]) path.cells.push_back(c);
    path.cells.push_back(*start_cell);
    std::reverse(path.cells.begin(), path.cells.end());
    path.steps = *best[*goal_cell];

    const Vec2 start_center = mesh.center(*start_cell);
    if (!(start == start_center)) path.waypoints.push_back(start);
    for (std::size_t c : path.cells) path.waypoints.push_back(mesh.center(c));
    if (!(goal == goal_center)) path.waypoints.push_back(goal);
    path.total_cost = path.steps.cells() * cell + distance(start, start_center) + distance(goal, goal_center);
    return path;
}

}  // namespace stage::pathfind
