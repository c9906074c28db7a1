#include "instanton/complexes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace instanton {

IntMat IntMat::identity(int n) {
    IntMat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

IntMat IntMat::multiply(const IntMat& other) const {
    if (cols != other.rows) throw ComplexError("matrix shape mismatch in multiply");
    IntMat out(rows, other.cols);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k < cols; ++k) {
            std::int64_t v = at(i, k);
            if (v == 0) continue;
            for (int j = 0; j < other.cols; ++j) out.at(i, j) += v * other.at(k, j);
        }
    return out;
}

bool IntMat::is_zero() const {
    return std::all_of(data.begin(), data.end(), [](std::int64_t v) { return v == 0; });
}

SmithResult smith_normal_form(const IntMat& input) {
    IntMat a = input;
    SmithResult res;
    res.U = IntMat::identity(a.rows);
    res.V = IntMat::identity(a.cols);

    auto swap_rows = [&](int i, int j) {
        for (int c = 0; c < a.cols; ++c) std::swap(a.at(i, c), a.at(j, c));
        for (int c = 0; c < res.U.cols; ++c) std::swap(res.U.at(i, c), res.U.at(j, c));
    };
    auto swap_cols = [&](int i, int j) {
        for (int r = 0; r < a.rows; ++r) std::swap(a.at(r, i), a.at(r, j));
        for (int r = 0; r < res.V.rows; ++r) std::swap(res.V.at(r, i), res.V.at(r, j));
    };
    auto add_row = [&](int dst, int src, std::int64_t f) {  // row dst += f * row src
        for (int c = 0; c < a.cols; ++c) a.at(dst, c) += f * a.at(src, c);
        for (int c = 0; c < res.U.cols; ++c) res.U.at(dst, c) += f * res.U.at(src, c);
    };
    auto add_col = [&](int dst, int src, std::int64_t f) {
        for (int r = 0; r < a.rows; ++r) a.at(r, dst) += f * a.at(r, src);
        for (int r = 0; r < res.V.rows; ++r) res.V.at(r, dst) += f * res.V.at(r, src);
    };
    auto negate_row = [&](int i) {
        for (int c = 0; c < a.cols; ++c) a.at(i, c) = -a.at(i, c);
        for (int c = 0; c < res.U.cols; ++c) res.U.at(i, c) = -res.U.at(i, c);
    };

    const int nmin = std::min(a.rows, a.cols);
    for (int t = 0; t < nmin; ++t) {
        // pivot on the minimal-absolute-value nonzero entry of the submatrix
        int pr = -1, pc = -1;
        std::int64_t best = 0;
        for (int r = t; r < a.rows; ++r)
            for (int c = t; c < a.cols; ++c) {
                std::int64_t v = std::abs(a.at(r, c));
                if (v != 0 && (pr < 0 || v < best)) {
                    best = v;
                    pr = r;
                    pc = c;
                }
            }
        if (pr < 0) break;  // submatrix is zero
        if (pr != t) swap_rows(pr, t);
        if (pc != t) swap_cols(pc, t);

        bool clean = false;
        while (!clean) {
            clean = true;
            for (int r = t + 1; r < a.rows; ++r) {
                if (a.at(r, t) == 0) continue;
                std::int64_t f = a.at(r, t) / a.at(t, t);
                add_row(r, t, -f);
                if (a.at(r, t) != 0) {  // remainder became the smaller pivot
                    swap_rows(r, t);
                    clean = false;
                }
            }
            for (int c = t + 1; c < a.cols; ++c) {
                if (a.at(t, c) == 0) continue;
                std::int64_t f = a.at(t, c) / a.at(t, t);
                add_col(c, t, -f);
                if (a.at(t, c) != 0) {
                    swap_cols(c, t);
                    clean = false;
                }
            }
            if (!clean) continue;
            // divisibility: pivot must divide every remaining entry
            for (int r = t + 1; r < a.rows && clean; ++r)
                for (int c = t + 1; c < a.cols && clean; ++c)
                    if (a.at(r, c) % a.at(t, t) != 0) {
                        add_row(t, r, 1);
                        clean = false;
                    }
        }
        if (a.at(t, t) < 0) negate_row(t);
        res.invariant_factors.push_back(a.at(t, t));
        ++res.rank;
    }
    return res;
}

namespace {

void check_composition(const ChainComplex& cx) {
    const int top = static_cast<int>(cx.ranks.size()) - 1;
    for (int k = 0; k <= top; ++k) {
        if (cx.coboundary) {
            if (k + 1 > top) continue;
            const IntMat& d_k = cx.matrices[k];
            const IntMat& d_k1 = cx.matrices[k + 1];
            if (d_k1.rows == 0 || d_k.rows == 0) continue;
            IntMat prod = d_k1.multiply(d_k);
            if (!prod.is_zero())
                throw ComplexError("d o d != 0 between degrees " + std::to_string(k) + " and " +
                                   std::to_string(k + 2));
        } else {
            if (k + 1 > top) continue;
            const IntMat& b_k1 = cx.matrices[k + 1];
            if (k == 0) continue;
            const IntMat& b_k = cx.matrices[k];
            if (b_k.rows == 0 || b_k1.rows == 0) continue;
            IntMat prod = b_k.multiply(b_k1);
            if (!prod.is_zero()) {
                for (int r = 0; r < prod.rows; ++r)
                    for (int c = 0; c < prod.cols; ++c)
                        if (prod.at(r, c) != 0)
                            throw ComplexError("boundary o boundary != 0: entry (" +
                                               std::to_string(r) + "," + std::to_string(c) +
                                               ") = " + std::to_string(prod.at(r, c)) +
                                               " in degree " + std::to_string(k + 1));
            }
        }
    }
}

}  // namespace

std::vector<HomologyDegree> homology(const ChainComplex& cx) {
    check_composition(cx);
    const int top = static_cast<int>(cx.ranks.size()) - 1;
    std::vector<SmithResult> snf(cx.matrices.size());
    std::vector<int> mrank(cx.matrices.size(), 0);
    for (std::size_t k = 0; k < cx.matrices.size(); ++k) {
        if (cx.matrices[k].rows > 0 && cx.matrices[k].cols > 0) {
            snf[k] = smith_normal_form(cx.matrices[k]);
            mrank[k] = snf[k].rank;
        }
    }
    std::vector<HomologyDegree> out(top + 1);
    for (int k = 0; k <= top; ++k) {
        // "outgoing" differential from degree k and "incoming" one whose
        // cokernel torsion lands in degree k
        int out_rank, in_idx;
        if (cx.coboundary) {
            out_rank = mrank[k];
            in_idx = k - 1;
        } else {
            out_rank = mrank[k];
            in_idx = k + 1;
        }
        int in_rank = (in_idx >= 0 && in_idx <= top) ? mrank[in_idx] : 0;
        out[k].betti = cx.ranks[k] - out_rank - in_rank;
        if (in_idx >= 0 && in_idx <= top)
            for (std::int64_t f : snf[in_idx].invariant_factors)
                if (f > 1) out[k].torsion.push_back(f);
    }
    return out;
}

// ---- corner posets ---------------------------------------------------------

int CornerPoset::incidence_value(int k, int alpha, int beta) const {
    if (k < 1 || k > top_dim()) return 0;
    auto it = incidence[k - 1].find({alpha, beta});
    return it == incidence[k - 1].end() ? 0 : it->second;
}

void CornerPoset::set_incidence(int k, int alpha, int beta, int value) {
    if (k < 1 || k > top_dim()) throw ComplexError("incidence degree out of range");
    if (value == 0)
        incidence[k - 1].erase({alpha, beta});
    else
        incidence[k - 1][{alpha, beta}] = value;
}

CornerPoset interval_poset() {
    CornerPoset p;
    p.components = {{"v0", "v1"}, {"e"}};
    p.incidence.resize(1);
    p.set_incidence(1, 0, 0, -1);
    p.set_incidence(1, 0, 1, +1);
    return p;
}

CornerPoset point_poset() {
    CornerPoset p;
    p.components = {{"pt"}};
    return p;
}

CornerPoset corner_poset_product(const CornerPoset& p, const CornerPoset& q) {
    auto pre = incidence_check(p);
    auto qre = incidence_check(q);
    if (!pre.passes || !qre.passes)
        throw ComplexError("product factors violate the incidence relation");

    const int dp = p.top_dim(), dq = q.top_dim();
    CornerPoset out;
    out.components.resize(dp + dq + 1);
    out.incidence.resize(dp + dq);
    // index of (a-th component of P_da, b-th of Q_db) inside product dim da+db
    std::map<std::tuple<int, int, int, int>, int> index;  // (da, db, a, b) -> product index
    for (int d = 0; d <= dp + dq; ++d) {
        for (int da = std::max(0, d - dq); da <= std::min(d, dp); ++da) {
            int db = d - da;
            for (int a = 0; a < static_cast<int>(p.components[da].size()); ++a)
                for (int b = 0; b < static_cast<int>(q.components[db].size()); ++b) {
                    index[{da, db, a, b}] = static_cast<int>(out.components[d].size());
                    out.components[d].push_back("(" + p.components[da][a] + "|" +
                                                q.components[db][b] + ")");
                }
        }
    }
    for (int d = 1; d <= dp + dq; ++d) {
        for (int da = std::max(0, d - dq); da <= std::min(d, dp); ++da) {
            int db = d - da;
            for (int a = 0; a < static_cast<int>(p.components[da].size()); ++a)
                for (int b = 0; b < static_cast<int>(q.components[db].size()); ++b) {
                    int alpha = index[{da, db, a, b}];
                    // first-factor faces
                    if (da >= 1)
                        for (int b1 = 0; b1 < static_cast<int>(p.components[da - 1].size()); ++b1) {
                            int v = p.incidence_value(da, a, b1);
                            if (v) out.set_incidence(d, alpha, index[{da - 1, db, b1, b}], v);
                        }
                    // second-factor faces pick up the graded sign
                    if (db >= 1)
                        for (int b2 = 0; b2 < static_cast<int>(q.components[db - 1].size()); ++b2) {
                            int v = q.incidence_value(db, b, b2);
                            if (v)
                                out.set_incidence(d, alpha, index[{da, db - 1, a, b2}],
                                                  (da % 2 == 0 ? v : -v));
                        }
                }
        }
    }
    return out;
}

IncidenceReport incidence_check(const CornerPoset& p) {
    IncidenceReport rep;
    for (int k = 1; k < p.top_dim(); ++k) {
        // pairs (alpha' in P_{k+1}, alpha'' in P_{k-1})
        for (int ap = 0; ap < static_cast<int>(p.components[k + 1].size()); ++ap)
            for (int app = 0; app < static_cast<int>(p.components[k - 1].size()); ++app) {
                std::int64_t sum = 0;
                for (int b = 0; b < static_cast<int>(p.components[k].size()); ++b)
                    sum += static_cast<std::int64_t>(p.incidence_value(k + 1, ap, b)) *
                           p.incidence_value(k, b, app);
                if (sum != 0) {
                    rep.passes = false;
                    rep.violations.push_back({k, ap, app, sum});
                }
            }
    }
    return rep;
}

void flip_orientation(CornerPoset& p, int dim, int component) {
    if (dim < 0 || dim > p.top_dim()) throw ComplexError("flip dimension out of range");
    if (dim >= 1)
        for (int b = 0; b < static_cast<int>(p.components[dim - 1].size()); ++b) {
            int v = p.incidence_value(dim, component, b);
            if (v) p.set_incidence(dim, component, b, -v);
        }
    if (dim + 1 <= p.top_dim())
        for (int a = 0; a < static_cast<int>(p.components[dim + 1].size()); ++a) {
            int v = p.incidence_value(dim + 1, a, component);
            if (v) p.set_incidence(dim + 1, a, component, -v);
        }
}

ChainComplex incidence_cochain_complex(const CornerPoset& p) {
    ChainComplex cx;
    cx.coboundary = true;
    const int top = p.top_dim();
    cx.ranks.resize(top + 1);
    cx.labels = p.components;
    cx.matrices.resize(top + 1);
    for (int k = 0; k <= top; ++k) cx.ranks[k] = static_cast<int>(p.components[k].size());
    for (int k = 0; k < top; ++k) {
        IntMat d(cx.ranks[k + 1], cx.ranks[k]);
        for (int a = 0; a < cx.ranks[k + 1]; ++a)
            for (int b = 0; b < cx.ranks[k]; ++b) d.at(a, b) = p.incidence_value(k + 1, a, b);
        cx.matrices[k] = std::move(d);
    }
    cx.matrices[top] = IntMat(0, cx.ranks[top]);
    return cx;
}

std::vector<HomologyDegree> incidence_cohomology(const CornerPoset& p, bool use_rationals) {
    auto rep = incidence_check(p);
    if (!rep.passes) throw ComplexError("incidence relation fails; cohomology undefined");
    auto h = homology(incidence_cochain_complex(p));
    if (use_rationals)
        for (auto& deg : h) deg.torsion.clear();  // torsion dies over Q
    return h;
}

ChainComplex build_morse_complex(
    const std::vector<std::pair<std::string, int>>& generators_with_index,
    const std::map<std::pair<std::string, std::string>, std::int64_t>& signed_counts) {
    int top = 0;
    for (const auto& [label, idx] : generators_with_index) top = std::max(top, idx);
    ChainComplex cx;
    cx.ranks.assign(top + 1, 0);
    cx.labels.resize(top + 1);
    std::map<std::string, std::pair<int, int>> where;  // label -> (degree, position)
    for (const auto& [label, idx] : generators_with_index) {
        where[label] = {idx, cx.ranks[idx]};
        ++cx.ranks[idx];
        cx.labels[idx].push_back(label);
    }
    cx.matrices.resize(top + 1);
    cx.matrices[0] = IntMat(0, cx.ranks[0]);
    for (int k = 1; k <= top; ++k) cx.matrices[k] = IntMat(cx.ranks[k - 1], cx.ranks[k]);
    for (const auto& [pair, count] : signed_counts) {
        auto src = where.find(pair.first);
        auto dst = where.find(pair.second);
        if (src == where.end() || dst == where.end())
            throw ComplexError("signed count references unknown generator");
        auto [ks, is] = src->second;
        auto [kd, id] = dst->second;
        if (ks != kd + 1) throw ComplexError("signed count pair is not index difference 1");
        cx.matrices[ks].at(id, is) = count;
    }
    return cx;
}

// ---- serialization ---------------------------------------------------------

std::string poset_to_text(const CornerPoset& p) {
    std::ostringstream out;
    out << "poset topdim " << p.top_dim() << "\n";
    for (int d = 0; d <= p.top_dim(); ++d)
        for (const auto& label : p.components[d]) out << "component " << d << " " << label << "\n";
    for (int k = 1; k <= p.top_dim(); ++k)
        for (const auto& [key, v] : p.incidence[k - 1])
            out << "incidence " << k << " " << p.components[k][key.first] << " "
                << p.components[k - 1][key.second] << " " << v << "\n";
    return out.str();
}

CornerPoset poset_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    if (!(in >> word) || word != "poset") throw ComplexError("poset file must start with 'poset'");
    int topdim;
    if (!(in >> word >> topdim) || word != "topdim") throw ComplexError("missing 'topdim'");
    CornerPoset p;
    p.components.resize(topdim + 1);
    p.incidence.resize(std::max(topdim, 0));
    std::vector<std::map<std::string, int>> lookup(topdim + 1);
    while (in >> word) {
        if (word == "component") {
            int d;
            std::string label;
            if (!(in >> d >> label)) throw ComplexError("malformed component line");
            if (d < 0 || d > topdim) throw ComplexError("component dimension out of range");
            lookup[d][label] = static_cast<int>(p.components[d].size());
            p.components[d].push_back(label);
        } else if (word == "incidence") {
            int k, v;
            std::string la, lb;
            if (!(in >> k >> la >> lb >> v)) throw ComplexError("malformed incidence line");
            if (k < 1 || k > topdim) throw ComplexError("incidence degree out of range");
            auto a = lookup[k].find(la);
            auto b = lookup[k - 1].find(lb);
            if (a == lookup[k].end() || b == lookup[k - 1].end())
                throw ComplexError("incidence references unknown component '" + la + "'/'" + lb + "'");
            p.set_incidence(k, a->second, b->second, v);
        } else {
            throw ComplexError("unknown poset record '" + word + "'");
        }
    }
    return p;
}

std::string complex_to_text(const ChainComplex& c) {
    std::ostringstream out;
    out << "complex " << (c.coboundary ? "coboundary" : "boundary") << " topdeg "
        << c.ranks.size() - 1 << "\n";
    for (std::size_t k = 0; k < c.ranks.size(); ++k)
        for (const auto& label : c.labels[k]) out << "generator " << k << " " << label << "\n";
    for (std::size_t k = 0; k < c.matrices.size(); ++k) {
        const IntMat& m = c.matrices[k];
        for (int r = 0; r < m.rows; ++r)
            for (int col = 0; col < m.cols; ++col)
                if (m.at(r, col) != 0) {
                    std::size_t row_deg = c.coboundary ? k + 1 : k - 1;
                    out << "entry " << k << " " << c.labels[row_deg][r] << " " << c.labels[k][col]
                        << " " << m.at(r, col) << "\n";
                }
    }
    return out.str();
}

ChainComplex complex_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string word, dir;
    int topdeg;
    if (!(in >> word >> dir >> word >> topdeg) || word != "topdeg")
        throw ComplexError("malformed complex header");
    ChainComplex c;
    c.coboundary = dir == "coboundary";
    c.ranks.assign(topdeg + 1, 0);
    c.labels.resize(topdeg + 1);
    std::vector<std::map<std::string, int>> lookup(topdeg + 1);
    struct Entry {
        int k;
        std::string row, col;
        std::int64_t v;
    };
    std::vector<Entry> entries;
    while (in >> word) {
        if (word == "generator") {
            int k;
            std::string label;
            if (!(in >> k >> label)) throw ComplexError("malformed generator line");
            lookup[k][label] = c.ranks[k]++;
            c.labels[k].push_back(label);
        } else if (word == "entry") {
            Entry e;
            if (!(in >> e.k >> e.row >> e.col >> e.v)) throw ComplexError("malformed entry line");
            entries.push_back(e);
        } else {
            throw ComplexError("unknown complex record '" + word + "'");
        }
    }
    c.matrices.resize(topdeg + 1);
    for (int k = 0; k <= topdeg; ++k) {
        int row_deg = c.coboundary ? k + 1 : k - 1;
        int rows = (row_deg >= 0 && row_deg <= topdeg) ? c.ranks[row_deg] : 0;
        c.matrices[k] = IntMat(rows, c.ranks[k]);
    }
    for (const auto& e : entries) {
        int row_deg = c.coboundary ? e.k + 1 : e.k - 1;
        c.matrices[e.k].at(lookup[row_deg].at(e.row), lookup[e.k].at(e.col)) = e.v;
    }
    return c;
}

}  // namespace instanton
