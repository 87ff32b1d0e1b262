#include "mcflab/immersions.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mcflab {

namespace {

constexpr double kPi = std::numbers::pi;

Vec wrapped(const DiscreteImmersion& imm, int index, int wrap) {
    if (wrap == 0) return imm.vertices[index];
    return imm.vertices[index] + static_cast<double>(wrap) * imm.period;
}

// Orthonormal basis of the part of T_x M orthogonal to the columns of `tangent`,
// picked greedily from the space's tangent basis (largest residual first).
Mat normal_complement(const LocalGeometry& geo, const Mat& tangent) {
    const Mat& basis = geo.tangent_basis();
    const int codim = static_cast<int>(basis.cols() - tangent.cols());
    Mat frame(basis.rows(), std::max(codim, 0));
    std::vector<Vec> accepted;
    for (int k = 0; k < tangent.cols(); ++k) accepted.push_back(tangent.col(k));
    std::vector<bool> used(basis.cols(), false);
    for (int a = 0; a < codim; ++a) {
        int best = -1;
        double best_norm = -1.0;
        Vec best_vec;
        for (int k = 0; k < basis.cols(); ++k) {
            if (used[k]) continue;
            Vec r = basis.col(k);
            for (const Vec& q : accepted) r -= geo.inner(q, r) * q;
            const double n = geo.norm(r);
            if (n > best_norm + 1e-12) {
                best = k;
                best_norm = n;
                best_vec = r;
            }
        }
        used[best] = true;
        best_vec /= best_norm;
        frame.col(a) = best_vec;
        accepted.push_back(best_vec);
    }
    return frame;
}

// Fills h, H, |A|^2 and |H|^2 from the normal-valued second fundamental form
// evaluated on the orthonormal tangent frame.
void finish_forms(const LocalGeometry& geo, VertexForms& out,
                  const std::vector<std::vector<Vec>>& second) {
    const int m = static_cast<int>(out.tangent_frame.cols());
    const int codim = static_cast<int>(out.normal_frame.cols());
    out.shape.assign(codim, Mat::Zero(m, m));
    out.mean_curvature = Vec::Zero(geo.point().size());
    out.norm_A2 = 0.0;
    out.norm_H2 = 0.0;
    for (int a = 0; a < codim; ++a) {
        const Vec xi = out.normal_frame.col(a);
        double trace = 0.0;
        for (int i = 0; i < m; ++i) {
            for (int j = i; j < m; ++j) {
                const double hij = geo.inner(second[i][j], xi);
                out.shape[a](i, j) = hij;
                out.shape[a](j, i) = hij;
            }
            trace += out.shape[a](i, i);
        }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) out.norm_A2 += out.shape[a](i, j) * out.shape[a](i, j);
        out.mean_curvature += trace * xi;
        out.norm_H2 += trace * trace;
    }
}

VertexForms curve_forms(const DiscreteImmersion& imm, int i) {
    const int n = imm.size();
    if (n < 5) throw Error(ErrorCode::DegenerateNeighborhood, "curve needs at least 5 vertices");
    const Vec& x = imm.vertices[i];
    const LocalGeometry geo(imm.space, x);
    std::array<Vec, 5> pts;
    std::array<double, 5> s{};
    for (int k = -2; k <= 2; ++k) pts[k + 2] = imm.vertices[((i + k) % n + n) % n];
    s[2] = 0.0;
    for (int k = 3; k < 5; ++k) s[k] = s[k - 1] + chord_length(imm.space, pts[k - 1], pts[k]);
    for (int k = 1; k >= 0; --k) s[k] = s[k + 1] - chord_length(imm.space, pts[k + 1], pts[k]);
    const double scale = 0.25 * (s[4] - s[0]);
    if (!(scale > 0.0)) throw Error(ErrorCode::DegenerateNeighborhood, "repeated curve vertices");
    Eigen::Matrix<double, 5, 5> vand;
    Eigen::Matrix<double, 5, Eigen::Dynamic> rhs(5, x.size());
    for (int k = 0; k < 5; ++k) {
        const double sigma = s[k] / scale;
        double p = 1.0;
        for (int d = 0; d < 5; ++d) {
            vand(k, d) = p;
            p *= sigma;
        }
        rhs.row(k) = (pts[k] - x).transpose();
    }
    const Eigen::Matrix<double, 5, Eigen::Dynamic> coef = vand.partialPivLu().solve(rhs);
    const Vec xs = coef.row(1).transpose() / scale;
    const Vec xss = 2.0 * coef.row(2).transpose() / (scale * scale);
    const Vec t = geo.tangent(xs);
    const double speed2 = geo.inner(t, t);
    if (!(speed2 > 0.0)) throw Error(ErrorCode::DegenerateNeighborhood, "zero tangent");
    const Vec acc = geo.tangent(xss + geo.christoffel(t, t));
    const Vec kappa = (acc - geo.inner(acc, t) / speed2 * t) / speed2;

    VertexForms out;
    out.tangent_frame = t / std::sqrt(speed2);
    out.normal_frame = normal_complement(geo, out.tangent_frame);
    finish_forms(geo, out, {{kappa}});
    return out;
}

std::vector<std::pair<int, int>> two_ring(const std::vector<std::vector<Neighbor>>& rings, int i) {
    std::vector<std::pair<int, int>> out;
    for (const Neighbor& a : rings[i]) {
        out.emplace_back(a.index, a.wrap);
        for (const Neighbor& b : rings[a.index]) out.emplace_back(b.index, a.wrap + b.wrap);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    out.erase(std::remove(out.begin(), out.end(), std::make_pair(i, 0)), out.end());
    return out;
}

VertexForms surface_forms(const DiscreteImmersion& imm, int i,
                          const std::vector<std::vector<Neighbor>>& rings) {
    const Vec& x = imm.vertices[i];
    const LocalGeometry geo(imm.space, x);
    const auto ring = two_ring(rings, i);
    const int count = static_cast<int>(ring.size());
    if (count < 5) {
        std::ostringstream os;
        os << "vertex " << i << " has only " << count << " neighbours";
        throw Error(ErrorCode::DegenerateNeighborhood, os.str());
    }
    const Mat& basis = geo.tangent_basis();
    const int dim = static_cast<int>(basis.cols());
    if (dim < 2) throw Error(ErrorCode::DegenerateNeighborhood, "space too small for a surface");
    const Mat gb = geo.metric() * basis;

    // Tangent plane from the metric covariance of the projected offsets.
    std::vector<Vec> offsets(count);
    Eigen::MatrixXd coords(dim, count);
    for (int k = 0; k < count; ++k) {
        offsets[k] = wrapped(imm, ring[k].first, ring[k].second) - x;
        coords.col(k) = gb.transpose() * geo.tangent(offsets[k]);
    }
    const Eigen::MatrixXd cov = coords * coords.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::MatrixXd q = eig.eigenvectors().rightCols(2).rowwise().reverse();

    double scale = 0.0;
    Eigen::MatrixXd uv(count, 2);
    for (int k = 0; k < count; ++k) {
        uv.row(k) = (q.transpose() * coords.col(k)).transpose();
        scale += uv.row(k).squaredNorm();
    }
    scale = std::sqrt(scale / count);
    if (!(scale > 0.0)) throw Error(ErrorCode::DegenerateNeighborhood, "collapsed neighbourhood");
    uv /= scale;

    auto build = [&](int terms) {
        Eigen::MatrixXd design(count, terms);
        for (int k = 0; k < count; ++k) {
            const double u = uv(k, 0), v = uv(k, 1);
            design(k, 0) = u;
            design(k, 1) = v;
            design(k, 2) = 0.5 * u * u;
            design(k, 3) = u * v;
            design(k, 4) = 0.5 * v * v;
            if (terms == 9) {
                design(k, 5) = u * u * u;
                design(k, 6) = u * u * v;
                design(k, 7) = u * v * v;
                design(k, 8) = v * v * v;
            }
        }
        return design;
    };
    Eigen::MatrixXd rhs(count, x.size());
    for (int k = 0; k < count; ++k) rhs.row(k) = offsets[k].transpose();
    // Cubic fit when the stencil supports it (one-sided boundary stencils may not).
    int terms = count >= 9 ? 9 : 5;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(build(terms));
    qr.setThreshold(1e-10);
    if (qr.rank() < terms && terms == 9) {
        terms = 5;
        qr.compute(build(terms));
    }
    if (qr.rank() < terms) {
        std::ostringstream os;
        os << "vertex " << i << " neighbourhood is not a graph over its tangent plane";
        throw Error(ErrorCode::DegenerateNeighborhood, os.str());
    }
    const Eigen::MatrixXd coef = qr.solve(rhs);
    const Vec xu = geo.tangent(coef.row(0).transpose() / scale);
    const Vec xv = geo.tangent(coef.row(1).transpose() / scale);
    const double s2 = scale * scale;
    const std::array<Vec, 3> d2 = {Vec(coef.row(2).transpose() / s2), Vec(coef.row(3).transpose() / s2),
                                   Vec(coef.row(4).transpose() / s2)};
    const std::array<Vec, 2> t = {xu, xv};

    // Orthonormal frame e_i = sum_a M(i, a) t_a.
    const double n1 = geo.norm(xu);
    const Vec e1 = xu / n1;
    const double c21 = geo.inner(xv, e1);
    const Vec r2 = xv - c21 * e1;
    const double n2 = geo.norm(r2);
    if (!(n1 > 0.0) || !(n2 > 1e-12 * n1))
        throw Error(ErrorCode::DegenerateNeighborhood, "degenerate tangent plane");
    Eigen::Matrix2d m;
    m << 1.0 / n1, 0.0, -c21 / (n1 * n2), 1.0 / n2;

    VertexForms out;
    out.tangent_frame = Mat(x.size(), 2);
    out.tangent_frame.col(0) = e1;
    out.tangent_frame.col(1) = r2 / n2;
    out.normal_frame = normal_complement(geo, out.tangent_frame);

    // Normal part of the covariant second derivatives.
    auto normal_part = [&](const Vec& w) {
        Vec r = w;
        for (int k = 0; k < 2; ++k) r -= geo.inner(out.tangent_frame.col(k), w) * out.tangent_frame.col(k);
        return r;
    };
    std::array<std::array<Vec, 2>, 2> a_coord;
    const int idx[2][2] = {{0, 1}, {1, 2}};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            a_coord[a][b] = normal_part(geo.tangent(d2[idx[a][b]] + geo.christoffel(t[a], t[b])));
    std::vector<std::vector<Vec>> second(2, std::vector<Vec>(2));
    for (int i2 = 0; i2 < 2; ++i2) {
        for (int j2 = 0; j2 < 2; ++j2) {
            Vec s = Vec::Zero(x.size());
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) s += m(i2, a) * m(j2, b) * a_coord[a][b];
            second[i2][j2] = s;
        }
    }
    finish_forms(geo, out, second);
    return out;
}

bool same_kind(const AmbientSpace& a, const AmbientSpace& b) {
    return a.kind == b.kind && a.embed_dim == b.embed_dim;
}

// Parameter t with fiber_action(sub, from, t) = to, for two points of one fiber.
double fiber_offset(const SubmersionModel& sub, const Vec& from, const Vec& to) {
    switch (sub.kind) {
        case SubmersionKind::Hopf:
            return std::atan2(to.dot(hopf_j(from)), to.dot(from));
        case SubmersionKind::HeisenbergProj:
            return to(to.size() - 1) - from(from.size() - 1);
        case SubmersionKind::SasakiProj: {
            const Eigen::Vector3d p = from.head<3>(), u = from.tail<3>();
            const Eigen::Vector3d w = p.cross(u) / p.norm();
            const Eigen::Vector3d ut = to.tail<3>();
            return std::atan2(ut.dot(w), ut.dot(u));
        }
    }
    return 0.0;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

Vec DiscreteImmersion::corner(const Triangle& t, int k) const { return wrapped(*this, t.v[k], t.wrap[k]); }

double chord_length(const AmbientSpace& space, const Vec& a, const Vec& b) {
    const Vec d = b - a;
    const Vec mid = 0.5 * (a + b);
    return std::sqrt(std::max(0.0, d.dot(metric_tensor(space, mid) * d)));
}

namespace {

template <class F>
void for_each_edge(const DiscreteImmersion& imm, F&& f) {
    if (imm.kind == ImmersionKind::Curve) {
        const int n = imm.size();
        for (int i = 0; i < n; ++i) f(imm.vertices[i], imm.vertices[(i + 1) % n]);
        return;
    }
    for (const Triangle& t : imm.triangles)
        for (int k = 0; k < 3; ++k) {
            const int l = (k + 1) % 3;
            // Each interior edge is visited from both sides; keep one orientation.
            if (t.v[k] < t.v[l] || (t.v[k] == t.v[l] && t.wrap[k] < t.wrap[l]))
                f(imm.corner(t, k), imm.corner(t, l));
        }
}

}  // namespace

double DiscreteImmersion::mesh_size() const {
    double h = 0.0;
    for_each_edge(*this, [&](const Vec& a, const Vec& b) { h = std::max(h, chord_length(space, a, b)); });
    return h;
}

double DiscreteImmersion::min_edge() const {
    double h = std::numeric_limits<double>::infinity();
    for_each_edge(*this, [&](const Vec& a, const Vec& b) { h = std::min(h, chord_length(space, a, b)); });
    return h;
}

void validate(const DiscreteImmersion& imm) {
    for (int i = 0; i < imm.size(); ++i) {
        try {
            require_on_space(imm.space, imm.vertices[i]);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "vertex " << i << ": " << e.what();
            throw Error(ErrorCode::ConstraintViolation, os.str());
        }
    }
    if (imm.kind == ImmersionKind::Curve) {
        if (imm.size() < 3) throw Error(ErrorCode::MeshCollapse, "curve has fewer than 3 vertices");
        std::vector<std::vector<double>> keys;
        for (const Vec& v : imm.vertices) keys.emplace_back(v.data(), v.data() + v.size());
        std::sort(keys.begin(), keys.end());
        if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
            throw Error(ErrorCode::MeshCollapse, "curve has repeated vertices");
        return;
    }
    if (imm.triangles.empty()) throw Error(ErrorCode::MeshCollapse, "surface has no triangles");
    // Directed edges keyed by (from, to, wrap difference) must appear once and be paired.
    std::map<std::tuple<int, int, int>, int> directed;
    for (const Triangle& t : imm.triangles) {
        for (int k = 0; k < 3; ++k) {
            const int l = (k + 1) % 3;
            if (t.v[k] < 0 || t.v[k] >= imm.size())
                throw Error(ErrorCode::MeshCollapse, "triangle index out of range");
            if (t.v[k] == t.v[l] && t.wrap[k] == t.wrap[l])
                throw Error(ErrorCode::MeshCollapse, "degenerate triangle");
            ++directed[{t.v[k], t.v[l], t.wrap[l] - t.wrap[k]}];
        }
        if (!imm.period.size() && (t.wrap[0] || t.wrap[1] || t.wrap[2]))
            throw Error(ErrorCode::MeshCollapse, "wrapped corner without a period");
    }
    for (const auto& [key, count] : directed) {
        const auto [a, b, w] = key;
        const auto twin = directed.find({b, a, -w});
        if (count != 1 || twin == directed.end() || twin->second != 1) {
            std::ostringstream os;
            os << "edge " << a << "-" << b << " is not shared by exactly two consistently oriented triangles";
            throw Error(ErrorCode::MeshCollapse, os.str());
        }
    }
}

std::vector<std::vector<Neighbor>> one_rings(const DiscreteImmersion& imm) {
    std::vector<std::vector<Neighbor>> rings(imm.size());
    for (const Triangle& t : imm.triangles)
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
                if (k != l) rings[t.v[k]].push_back({t.v[l], t.wrap[l] - t.wrap[k]});
    for (auto& r : rings) {
        std::sort(r.begin(), r.end(), [](const Neighbor& a, const Neighbor& b) {
            return std::tie(a.index, a.wrap) < std::tie(b.index, b.wrap);
        });
        r.erase(std::unique(r.begin(), r.end()), r.end());
    }
    return rings;
}

double FundamentalFormsSample::max_A2() const {
    double m = 0.0;
    for (const auto& v : vertices) m = std::max(m, v.norm_A2);
    return m;
}

double FundamentalFormsSample::max_H2() const {
    double m = 0.0;
    for (const auto& v : vertices) m = std::max(m, v.norm_H2);
    return m;
}

VertexForms vertex_forms(const DiscreteImmersion& imm, int vertex,
                         const std::vector<std::vector<Neighbor>>& rings) {
    return imm.kind == ImmersionKind::Curve ? curve_forms(imm, vertex)
                                            : surface_forms(imm, vertex, rings);
}

FundamentalFormsSample fundamental_forms(const DiscreteImmersion& imm) {
    const auto rings = imm.kind == ImmersionKind::Surface ? one_rings(imm)
                                                          : std::vector<std::vector<Neighbor>>{};
    FundamentalFormsSample sample;
    sample.vertices.resize(imm.size());
    for (int i = 0; i < imm.size(); ++i) sample.vertices[i] = vertex_forms(imm, i, rings);
    return sample;
}

DiscreteImmersion lift_immersion(const SubmersionModel& sub, const DiscreteImmersion& base_imm,
                                 int fiber_res) {
    if (fiber_res < 3) throw Error(ErrorCode::InvalidArgument, "fiber_res must be at least 3");
    if (base_imm.kind != ImmersionKind::Curve)
        throw Error(ErrorCode::InvalidArgument, "only base curves can be lifted");
    if (!same_kind(base_imm.space, sub.base))
        throw Error(ErrorCode::InvalidArgument, "base immersion is not in the submersion base");
    const int n = base_imm.size();
    const double period = fiber_period(sub);

    // Section over the loop: continuation for circle fibers, z = 0 for Heisenberg.
    std::vector<Vec> section(n);
    for (int i = 0; i < n; ++i) {
        Vec q = fiber_point(sub, base_imm.vertices[i]);
        if (sub.kind != SubmersionKind::HeisenbergProj && i > 0)
            q = fiber_action(sub, q, -fiber_offset(sub, section[i - 1], q));
        section[i] = q;
    }
    if (sub.kind != SubmersionKind::HeisenbergProj) {
        // Close the loop by spreading the holonomy evenly.
        const Vec closing = fiber_action(sub, fiber_point(sub, base_imm.vertices[0]),
                                         -fiber_offset(sub, section[n - 1],
                                                       fiber_point(sub, base_imm.vertices[0])));
        const double holonomy = fiber_offset(sub, section[0], closing);
        for (int i = 1; i < n; ++i) section[i] = fiber_action(sub, section[i], -holonomy * i / n);
    }

    DiscreteImmersion out;
    out.space = sub.total;
    out.kind = ImmersionKind::Surface;
    out.vertices.reserve(static_cast<std::size_t>(n) * fiber_res);
    out.fiber_columns.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < fiber_res; ++j) {
            out.fiber_columns[i].push_back(static_cast<int>(out.vertices.size()));
            out.vertices.push_back(
                project_to_space(sub.total, fiber_action(sub, section[i], period * j / fiber_res)));
        }
    }
    const bool strip = sub.kind == SubmersionKind::HeisenbergProj;
    if (strip) {
        out.period = Vec::Zero(sub.total.embed_dim);
        out.period(sub.total.embed_dim - 1) = period;
    }
    auto floor_div = [&](int j) { return j >= 0 ? j / fiber_res : -((-j + fiber_res - 1) / fiber_res); };
    auto id = [&](int i, int j) { return (i % n) * fiber_res + (j - floor_div(j) * fiber_res); };
    auto wrap = [&](int j) { return strip ? floor_div(j) : 0; };
    auto pos = [&](int i, int j) -> Vec {
        const Vec& v = out.vertices[id(i, j)];
        return strip ? Vec(v + static_cast<double>(wrap(j)) * out.period) : v;
    };
    for (int i = 0; i < n; ++i) {
        // Shift the next column so that the strip between them is as little sheared as possible.
        int k = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int m = -fiber_res / 2; m <= fiber_res / 2; ++m) {
            const double d = chord_length(sub.total, pos(i, 0), pos(i + 1, m));
            if (d < best) {
                best = d;
                k = m;
            }
        }
        const bool forward = chord_length(sub.total, pos(i, 0), pos(i + 1, k + 1)) <=
                             chord_length(sub.total, pos(i, 1), pos(i + 1, k));
        for (int j = 0; j < fiber_res; ++j) {
            const int a = j, b = j + k;
            if (forward) {
                out.triangles.push_back({{id(i, a), id(i + 1, b), id(i + 1, b + 1)},
                                         {wrap(a), wrap(b), wrap(b + 1)}});
                out.triangles.push_back({{id(i, a), id(i + 1, b + 1), id(i, a + 1)},
                                         {wrap(a), wrap(b + 1), wrap(a + 1)}});
            } else {
                out.triangles.push_back({{id(i, a), id(i + 1, b), id(i, a + 1)},
                                         {wrap(a), wrap(b), wrap(a + 1)}});
                out.triangles.push_back({{id(i, a + 1), id(i + 1, b), id(i + 1, b + 1)},
                                         {wrap(a + 1), wrap(b), wrap(b + 1)}});
            }
        }
    }
    return out;
}

double invariance_defect(const SubmersionModel& sub, const DiscreteImmersion& total_imm) {
    if (total_imm.fiber_columns.empty())
        throw Error(ErrorCode::InvalidArgument, "immersion carries no fiber columns");
    double defect = 0.0;
    for (const auto& column : total_imm.fiber_columns) {
        const Vec b0 = project_point(sub, total_imm.vertices[column.front()]);
        for (int v : column)
            defect = std::max(defect, (project_point(sub, total_imm.vertices[v]) - b0).norm());
    }
    return defect;
}

DiscreteImmersion project_immersion(const SubmersionModel& sub, const DiscreteImmersion& total_imm,
                                    std::optional<double> cluster_radius) {
    const double radius = cluster_radius.value_or(0.5 * total_imm.min_edge());
    DiscreteImmersion out;
    out.space = sub.base;
    out.kind = ImmersionKind::Curve;
    std::vector<Vec> projected(total_imm.size());
    for (int i = 0; i < total_imm.size(); ++i) projected[i] = project_point(sub, total_imm.vertices[i]);

    std::vector<std::vector<int>> clusters = total_imm.fiber_columns;
    if (clusters.empty()) {
        std::vector<Vec> seeds;
        for (int i = 0; i < total_imm.size(); ++i) {
            std::size_t c = 0;
            while (c < seeds.size() && (projected[i] - seeds[c]).norm() > radius) ++c;
            if (c == seeds.size()) {
                seeds.push_back(projected[i]);
                clusters.emplace_back();
            }
            clusters[c].push_back(i);
        }
        for (const auto& c : clusters)
            if (c.size() != clusters.front().size())
                throw Error(ErrorCode::NotInvariant, "fiber clusters have unequal sizes");
        if (clusters.front().size() < 2)
            throw Error(ErrorCode::NotInvariant, "projection does not collapse any fiber");
    }
    if (clusters.size() < 3) throw Error(ErrorCode::NotInvariant, "fewer than 3 fiber clusters");

    std::vector<Vec> centers;
    for (const auto& c : clusters) {
        Vec mean = Vec::Zero(sub.base.embed_dim);
        for (int v : c) mean += projected[v];
        mean /= static_cast<double>(c.size());
        for (int v : c) {
            if ((projected[v] - mean).norm() > radius) {
                std::ostringstream os;
                os << "fiber through vertex " << v << " spreads over " << (projected[v] - mean).norm()
                   << " > " << radius;
                throw Error(ErrorCode::NotInvariant, os.str());
            }
        }
        centers.push_back(project_to_space(sub.base, mean));
    }
    if (!total_imm.fiber_columns.empty()) {
        out.vertices = std::move(centers);
        return out;
    }
    // Order clusters into a loop by nearest-neighbour chaining.
    std::vector<bool> used(centers.size(), false);
    int current = 0;
    used[0] = true;
    out.vertices.push_back(centers[0]);
    for (std::size_t step = 1; step < centers.size(); ++step) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (used[c]) continue;
            const double d = (centers[c] - centers[current]).norm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        used[best] = true;
        current = best;
        out.vertices.push_back(centers[best]);
    }
    return out;
}

double tangency_defect_at(const SubmersionModel& sub, const Vec& b, const Mat& tangent_frame,
                          const Mat& normal_frame) {
    auto j_of = [&](const Vec& w) -> Vec {
        switch (sub.kind) {
            case SubmersionKind::Hopf:
            case SubmersionKind::SasakiProj: {
                const Eigen::Vector3d n = b.head<3>().normalized();
                const Eigen::Vector3d jw = n.cross(Eigen::Vector3d(w.head<3>()));
                Vec out(3);
                out = jw;
                return out;
            }
            case SubmersionKind::HeisenbergProj: {
                const int m = static_cast<int>(w.size()) / 2;
                Vec out(w.size());
                out.head(m) = -w.tail(m);
                out.tail(m) = w.head(m);
                return out;
            }
        }
        return w;
    };
    double defect = 0.0;
    for (int a = 0; a < normal_frame.cols(); ++a) {
        const Vec jxi = j_of(normal_frame.col(a));
        for (int i = 0; i < tangent_frame.cols(); ++i) {
            const double c = jxi.dot(tangent_frame.col(i));
            defect += c * c;
        }
    }
    return defect;
}

std::vector<double> tangency_defect(const DiscreteImmersion& imm, const SubmersionModel& sub) {
    if (!same_kind(imm.space, sub.base))
        throw Error(ErrorCode::UnsupportedSpace,
                    std::string("no complex structure for ") + std::string(to_string(imm.space.kind)) +
                        " under " + std::string(to_string(sub.kind)));
    const auto forms = fundamental_forms(imm);
    std::vector<double> out(imm.size());
    for (int i = 0; i < imm.size(); ++i)
        out[i] = tangency_defect_at(sub, imm.vertices[i], forms.vertices[i].tangent_frame,
                                    forms.vertices[i].normal_frame);
    return out;
}

namespace pinching {

namespace {
std::string label(const char* base, std::initializer_list<std::pair<const char*, double>> params) {
    std::ostringstream os;
    os << base;
    for (const auto& [k, v] : params) os << "_" << k << v;
    return os.str();
}
}  // namespace

PinchingCondition hopf_hypersurface(int n, double c) {
    return {label("hopf_hypersurface", {{"n", n}, {"c", c}}), 1.0 / (2.0 * n - 2.0), 4.0 * c};
}
PinchingCondition hopf_variation(int n, double lambda) {
    return {label("hopf_variation", {{"n", n}, {"lambda", lambda}}), 1.0 / (2.0 * n - 2.0),
            2.0 + 2.0 / std::sqrt(lambda)};
}
PinchingCondition quaternionic_hypersurface(int n, double c) {
    return {label("s3_hypersurface", {{"n", n}, {"c", c}}), 1.0 / (4.0 * n - 2.0), 8.0 * c};
}
PinchingCondition quaternionic_variation(int n, double lambda) {
    return {label("s3_variation", {{"n", n}, {"lambda", lambda}}), 1.0 / (4.0 * n - 2.0),
            2.0 + 6.0 / std::sqrt(lambda)};
}
PinchingCondition quaternionic_nonexistence(int n, double c) {
    return {label("s3_nonexistence", {{"n", n}, {"c", c}}), 1.0 / (4.0 * n), 4.0 * c};
}
PinchingCondition high_codimension(int m, int k) {
    return {label("high_codimension", {{"m", m}, {"k", k}}), 1.0 / (m - 2.0),
            (m - 4.0 - 4.0 * k) / (m - 1.0)};
}
PinchingCondition cp_hypersurface(int n) {
    return {label("cp_hypersurface", {{"n", n}}), 1.0 / (4.0 * n - 2.0), 6.0};
}
PinchingCondition heisenberg_cylinder(int m) {
    const double a = (m >= 3 && m <= 5) ? 4.0 / (3.0 * (m - 1.0)) : 1.0 / (m - 2.0);
    return {label("heisenberg_cylinder", {{"m", m}}), a, 0.0};
}
PinchingCondition sasaki_bundle(int n, int k, double c) {
    return {label("sasaki", {{"n", n}, {"k", k}, {"c", c}}), 1.0 / (n - 1.0),
            2.0 * c + 0.5 * c * c * std::min(k, n)};
}

}  // namespace pinching

double pinching_margin_value(double A2, double H2, const PinchingCondition& cond) {
    return cond.a * H2 + cond.b - A2;
}

MarginReport pinching_margin(const FundamentalFormsSample& forms, const PinchingCondition& cond) {
    MarginReport r;
    r.min = std::numeric_limits<double>::infinity();
    for (const auto& v : forms.vertices) {
        r.margins.push_back(pinching_margin_value(v.norm_A2, v.norm_H2, cond));
        r.min = std::min(r.min, r.margins.back());
    }
    return r;
}

// --- generators -------------------------------------------------------------------

int samples_for(double length, double h) {
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "mesh size must be positive");
    return std::max(8, static_cast<int>(std::ceil(length / h)));
}

DiscreteImmersion plane_circle(double radius, int count, int dim) {
    if (count < 5 || !(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "plane_circle");
    DiscreteImmersion imm;
    imm.space = AmbientSpace::euclidean(dim);
    for (int i = 0; i < count; ++i) {
        const double a = 2.0 * kPi * i / count;
        Vec v = Vec::Zero(dim);
        v(0) = radius * std::cos(a);
        v(1) = radius * std::sin(a);
        imm.vertices.push_back(v);
    }
    return imm;
}

DiscreteImmersion geodesic_circle(const AmbientSpace& sphere, double rho, int count) {
    if (!(sphere.kind == SpaceKind::FsSphere ||
          (sphere.kind == SpaceKind::RoundSphere && sphere.dim == 2)))
        throw Error(ErrorCode::UnsupportedSpace, "geodesic_circle needs a 2-sphere");
    const double R = sphere.sphere_radius();
    const double alpha = rho / R;
    if (count < 5 || !(alpha > 0.0 && alpha < kPi))
        throw Error(ErrorCode::InvalidArgument, "geodesic radius out of range");
    DiscreteImmersion imm;
    imm.space = sphere;
    for (int i = 0; i < count; ++i) {
        const double a = 2.0 * kPi * i / count;
        Vec v(3);
        v << R * std::sin(alpha) * std::cos(a), R * std::sin(alpha) * std::sin(a), R * std::cos(alpha);
        imm.vertices.push_back(v);
    }
    return imm;
}

DiscreteImmersion great_circle(const AmbientSpace& sphere, int count) {
    auto imm = geodesic_circle(sphere, 0.5 * kPi * sphere.sphere_radius(), count);
    for (Vec& v : imm.vertices) v(2) = 0.0;
    return imm;
}

DiscreteImmersion equatorial_sphere(double c, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> pts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                                        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                                        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (auto& p : pts) p.normalize();
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            pts.push_back((pts[a] + pts[b]).normalized());
            return mid[key] = static_cast<int>(pts.size()) - 1;
        };
        std::vector<std::array<int, 3>> next;
        for (const auto& f : faces) {
            const int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), d = midpoint(f[2], f[0]);
            next.push_back({f[0], a, d});
            next.push_back({f[1], b, a});
            next.push_back({f[2], d, b});
            next.push_back({a, b, d});
        }
        faces = std::move(next);
    }
    DiscreteImmersion imm;
    imm.space = AmbientSpace::round_sphere(3, c);
    imm.kind = ImmersionKind::Surface;
    const double R = 1.0 / std::sqrt(c);
    for (const auto& p : pts) {
        Vec v(4);
        v << R * p(0), R * p(1), R * p(2), 0.0;
        imm.vertices.push_back(v);
    }
    for (const auto& f : faces) imm.triangles.push_back({f, {0, 0, 0}});
    return imm;
}

DiscreteImmersion clifford_torus(double c, int count_a, int count_b, double r1, double amplitude) {
    const double R = 1.0 / std::sqrt(c);
    if (r1 < 0.0) r1 = R / std::sqrt(2.0);
    if (count_a < 3 || count_b < 3 || !(r1 > 0.0 && r1 < R))
        throw Error(ErrorCode::InvalidArgument, "clifford_torus parameters");
    DiscreteImmersion imm;
    imm.space = AmbientSpace::round_sphere(3, c);
    imm.kind = ImmersionKind::Surface;
    for (int i = 0; i < count_a; ++i) {
        for (int j = 0; j < count_b; ++j) {
            const double a = 2.0 * kPi * i / count_a, b = 2.0 * kPi * j / count_b;
            const double s = std::min(r1 * (1.0 + amplitude * std::cos(a) * std::cos(b)), 0.999 * R);
            const double s2 = std::sqrt(R * R - s * s);
            Vec v(4);
            v << s * std::cos(a), s * std::sin(a), s2 * std::cos(b), s2 * std::sin(b);
            imm.vertices.push_back(v);
        }
    }
    auto id = [&](int i, int j) { return (i % count_a) * count_b + (j % count_b); };
    for (int i = 0; i < count_a; ++i) {
        for (int j = 0; j < count_b; ++j) {
            imm.triangles.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1)}, {0, 0, 0}});
            imm.triangles.push_back({{id(i, j), id(i + 1, j + 1), id(i, j + 1)}, {0, 0, 0}});
        }
    }
    return imm;
}

DiscreteImmersion coordinate_plane_patch(int axis_u, int axis_v, int count, double extent) {
    DiscreteImmersion imm;
    imm.space = AmbientSpace::euclidean(4);
    imm.kind = ImmersionKind::Surface;
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < count; ++j) {
            Vec v = Vec::Zero(4);
            v(axis_u) = -extent + 2.0 * extent * i / (count - 1);
            v(axis_v) = -extent + 2.0 * extent * j / (count - 1);
            imm.vertices.push_back(v);
        }
    }
    auto id = [&](int i, int j) { return i * count + j; };
    for (int i = 0; i + 1 < count; ++i) {
        for (int j = 0; j + 1 < count; ++j) {
            imm.triangles.push_back({{id(i, j), id(i + 1, j), id(i + 1, j + 1)}, {0, 0, 0}});
            imm.triangles.push_back({{id(i, j), id(i + 1, j + 1), id(i, j + 1)}, {0, 0, 0}});
        }
    }
    return imm;
}

// --- I/O ---------------------------------------------------------------------------

void write_off(std::ostream& os, const DiscreteImmersion& imm) {
    os << "OFF\n";
    const bool periodic = imm.period.size() > 0;
    if (periodic) {
        os << "# period";
        for (int k = 0; k < imm.period.size(); ++k) os << ' ' << fmt(imm.period(k));
        os << '\n';
    }
    os << imm.size() << ' ' << imm.triangles.size() << " 0\n";
    for (const Vec& v : imm.vertices) {
        for (int k = 0; k < v.size(); ++k) os << (k ? " " : "") << fmt(v(k));
        os << '\n';
    }
    for (const Triangle& t : imm.triangles) {
        os << "3 " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2];
        if (periodic) os << ' ' << t.wrap[0] << ' ' << t.wrap[1] << ' ' << t.wrap[2];
        os << '\n';
    }
}

DiscreteImmersion read_off(std::istream& is, const AmbientSpace& space) {
    DiscreteImmersion imm;
    imm.space = space;
    imm.kind = ImmersionKind::Surface;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        std::ostringstream os;
        os << "line " << line_no << ": " << msg;
        return Error(ErrorCode::ConfigError, os.str());
    };
    auto next = [&]() {
        while (std::getline(is, line)) {
            ++line_no;
            if (line.rfind("# period", 0) == 0) {
                std::istringstream ps(line.substr(8));
                std::vector<double> p;
                double v;
                while (ps >> v) p.push_back(v);
                imm.period = Vec(static_cast<int>(p.size()));
                for (std::size_t k = 0; k < p.size(); ++k) imm.period(static_cast<int>(k)) = p[k];
                continue;
            }
            if (line.empty() || line[0] == '#') continue;
            return true;
        }
        return false;
    };
    if (!next() || line.rfind("OFF", 0) != 0) throw fail("missing OFF header");
    if (!next()) throw fail("missing counts");
    std::istringstream counts(line);
    int nv = 0, nf = 0;
    if (!(counts >> nv >> nf)) throw fail("bad counts");
    for (int i = 0; i < nv; ++i) {
        if (!next()) throw fail("missing vertex");
        std::istringstream vs(line);
        Vec v(space.embed_dim);
        for (int k = 0; k < space.embed_dim; ++k)
            if (!(vs >> v(k))) throw fail("vertex needs " + std::to_string(space.embed_dim) + " coordinates");
        imm.vertices.push_back(v);
    }
    for (int f = 0; f < nf; ++f) {
        if (!next()) throw fail("missing face");
        std::istringstream fs(line);
        int k = 0;
        Triangle t;
        if (!(fs >> k >> t.v[0] >> t.v[1] >> t.v[2]) || k != 3) throw fail("faces must be triangles");
        if (imm.period.size() > 0) fs >> t.wrap[0] >> t.wrap[1] >> t.wrap[2];
        imm.triangles.push_back(t);
    }
    return imm;
}

void write_curve_csv(std::ostream& os, const DiscreteImmersion& imm) {
    for (int k = 0; k < imm.space.embed_dim; ++k) os << (k ? "," : "") << "x" << k;
    os << '\n';
    for (const Vec& v : imm.vertices) {
        for (int k = 0; k < v.size(); ++k) os << (k ? "," : "") << fmt(v(k));
        os << '\n';
    }
}

DiscreteImmersion read_curve_csv(std::istream& is, const AmbientSpace& space) {
    DiscreteImmersion imm;
    imm.space = space;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == 'x' || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        Vec v(space.embed_dim);
        for (int k = 0; k < space.embed_dim; ++k) {
            if (!(ls >> v(k))) {
                std::ostringstream os;
                os << "line " << line_no << ": expected " << space.embed_dim << " coordinates";
                throw Error(ErrorCode::ConfigError, os.str());
            }
        }
        imm.vertices.push_back(v);
    }
    return imm;
}

void write_forms_csv(std::ostream& os, const FundamentalFormsSample& forms,
                     const std::vector<PinchingCondition>& conditions) {
    os << "vertex,A2,H2";
    for (const auto& c : conditions) os << ",margin_" << c.name;
    os << '\n';
    for (std::size_t i = 0; i < forms.vertices.size(); ++i) {
        const auto& v = forms.vertices[i];
        os << i << ',' << fmt(v.norm_A2) << ',' << fmt(v.norm_H2);
        for (const auto& c : conditions) os << ',' << fmt(pinching_margin_value(v.norm_A2, v.norm_H2, c));
        os << '\n';
    }
}

}  // namespace mcflab
