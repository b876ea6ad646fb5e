#include "splitlab/io.hpp"

#include <fstream>

namespace splitlab {

json to_json(const Mat& m) {
    std::vector<double> re(static_cast<std::size_t>(m.size())), im(re.size());
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        re[k] = m.data()[k].real();
        im[k] = m.data()[k].imag();
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

Mat mat_from_json(const json& j) {
    const int rows = j.at("rows").get<int>(), cols = j.at("cols").get<int>();
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || re.size() != static_cast<std::size_t>(rows * cols) || im.size() != re.size())
        throw ValidationError("matrix: size mismatch");
    Mat m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = cplx(re[k], im[k]);
    return m;
}

json to_json(const GroupSpec& s) {
    return {{"rank", s.rank}, {"special", s.special}, {"metric_scale", s.metric_scale}, {"tol", s.tol}};
}

GroupSpec spec_from_json(const json& j) {
    return GroupSpec(j.at("rank").get<int>(), j.at("special").get<bool>(), j.value("metric_scale", 1.0),
                     j.value("tol", 1e-8));
}

json to_json(const WeightVector& d) { return d.d; }
WeightVector weights_from_json(const json& j) { return WeightVector(j.get<std::vector<int>>()); }

json to_json(const DiscreteLoop& loop) {
    json s = json::array();
    for (const auto& g : loop.samples) s.push_back(to_json(g));
    return {{"type", "loop"}, {"spec", to_json(loop.spec)}, {"samples", s}, {"convention", kConventionTag}};
}

DiscreteLoop loop_from_json(const json& j) {
    DiscreteLoop loop;
    loop.spec = spec_from_json(j.at("spec"));
    for (const auto& s : j.at("samples")) loop.samples.push_back(mat_from_json(s));
    validate_loop(loop);
    return loop;
}

json to_json(const LaurentLoop& g) {
    json c = json::array();
    for (const auto& a : g.coeffs) c.push_back(to_json(a));
    return {{"type", "laurent"}, {"rank", g.rank}, {"degree", g.degree}, {"coeffs", c}, {"convention", kConventionTag}};
}

LaurentLoop laurent_from_json(const json& j) {
    LaurentLoop g(j.at("rank").get<int>(), j.at("degree").get<int>());
    const auto& c = j.at("coeffs");
    if (c.size() != g.coeffs.size()) throw ValidationError("laurent: coefficient count mismatch");
    for (std::size_t k = 0; k < c.size(); ++k) {
        g.coeffs[k] = mat_from_json(c[k]);
        if (g.coeffs[k].rows() != g.rank || g.coeffs[k].cols() != g.rank) throw ValidationError("laurent: bad block size");
    }
    return g;
}

json to_json(const SphereGrid& g) { return {{"m_rho", g.m_rho}, {"n_theta", g.n_theta}}; }

SphereGrid grid_from_json(const json& j) {
    SphereGrid g;
    g.m_rho = j.at("m_rho").get<int>();
    g.n_theta = j.at("n_theta").get<int>();
    g.validate();
    return g;
}

json to_json(const ChartField& f) {
    const int r = f.data.empty() ? 0 : static_cast<int>(f.data.front().rows());
    std::vector<double> re, im;
    re.reserve(f.data.size() * r * r);
    im.reserve(re.capacity());
    for (const auto& m : f.data)
        for (Eigen::Index k = 0; k < m.size(); ++k) {
            re.push_back(m.data()[k].real());
            im.push_back(m.data()[k].imag());
        }
    return {{"first", f.first}, {"last", f.last}, {"n_theta", f.n_theta}, {"rank", r}, {"re", re}, {"im", im}};
}

ChartField chart_field_from_json(const json& j) {
    const int r = j.at("rank").get<int>();
    ChartField f(j.at("first").get<int>(), j.at("last").get<int>(), j.at("n_theta").get<int>(), r);
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    if (re.size() != f.data.size() * r * r || im.size() != re.size()) throw ValidationError("chart field: size mismatch");
    std::size_t p = 0;
    for (auto& m : f.data)
        for (Eigen::Index k = 0; k < m.size(); ++k, ++p) m.data()[k] = cplx(re[p], im[p]);
    return f;
}

json to_json(const TwoChartConnection& a) {
    return {{"type", "connection"},
            {"spec", to_json(a.spec)},
            {"grid", to_json(a.grid)},
            {"north_rho", to_json(a.north_rho)},
            {"north_theta", to_json(a.north_theta)},
            {"south_rho", to_json(a.south_rho)},
            {"south_theta", to_json(a.south_theta)},
            {"transition", to_json(a.transition)},
            {"label", a.label},
            {"construction", a.construction},
            {"convention", kConventionTag}};
}

TwoChartConnection connection_from_json(const json& j) {
    TwoChartConnection a;
    a.spec = spec_from_json(j.at("spec"));
    a.grid = grid_from_json(j.at("grid"));
    a.north_rho = chart_field_from_json(j.at("north_rho"));
    a.north_theta = chart_field_from_json(j.at("north_theta"));
    a.south_rho = chart_field_from_json(j.at("south_rho"));
    a.south_theta = chart_field_from_json(j.at("south_theta"));
    a.transition = chart_field_from_json(j.at("transition"));
    a.label = j.value("label", std::vector<int>{});
    a.construction = j.value("construction", std::string{});
    if (j.contains("convention") && j.at("convention").get<std::string>() != kConventionTag)
        throw ValidationError("connection: written under a different sign convention");
    return a;
}

json to_json(const GaugeGenerator& g) {
    auto mats = [](const std::vector<Mat>& v) {
        json a = json::array();
        for (const auto& m : v) a.push_back(to_json(m));
        return a;
    };
    return {{"chart", g.chart == Chart::North ? "north" : "south"},
            {"rho_a", g.rho_a},
            {"rho_b", g.rho_b},
            {"cos_c", mats(g.cos_c)},
            {"cos_d", mats(g.cos_d)},
            {"sin_c", mats(g.sin_c)},
            {"sin_d", mats(g.sin_d)}};
}

GaugeGenerator gauge_generator_from_json(const json& j) {
    auto mats = [](const json& a) {
        std::vector<Mat> v;
        for (const auto& m : a) v.push_back(mat_from_json(m));
        return v;
    };
    GaugeGenerator g;
    const std::string chart = j.at("chart").get<std::string>();
    if (chart != "north" && chart != "south") throw ValidationError("gauge generator: chart must be north or south");
    g.chart = chart == "north" ? Chart::North : Chart::South;
    g.rho_a = j.at("rho_a").get<double>();
    g.rho_b = j.at("rho_b").get<double>();
    g.cos_c = mats(j.at("cos_c"));
    g.cos_d = mats(j.at("cos_d"));
    g.sin_c = mats(j.at("sin_c"));
    g.sin_d = mats(j.at("sin_d"));
    const std::size_t n = g.cos_c.size();
    if (n == 0 || g.cos_d.size() != n || g.sin_c.size() != n || g.sin_d.size() != n)
        throw ValidationError("gauge generator: mode lists differ in length");
    return g;
}

json to_json(const ConnectionFamily& f) {
    json params = json::array(), samples = json::array();
    for (const auto& p : f.params) params.push_back({p.x(), p.y(), p.z()});
    for (const auto& s : f.samples) samples.push_back(to_json(s));
    return {{"type", "family"},         {"name", f.name},     {"class", f.class_tag},
            {"sphere_dim", f.sphere_dim}, {"basepoint", f.basepoint}, {"params", params},
            {"samples", samples},       {"convention", kConventionTag}};
}

ConnectionFamily family_from_json(const json& j) {
    ConnectionFamily f;
    f.name = j.value("name", std::string{});
    f.class_tag = j.value("class", std::string{});
    f.sphere_dim = j.value("sphere_dim", 0);
    f.basepoint = j.value("basepoint", 0);
    for (const auto& p : j.value("params", json::array()))
        f.params.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    for (const auto& s : j.at("samples")) f.samples.push_back(loop_from_json(s));
    validate_family(f);
    return f;
}

json to_json(const MorseBottProblem& p) {
    return {{"type", "cascade-problem"},
            {"id", p.id},
            {"grad_tol", p.grad_tol},
            {"shooting_samples", p.shooting_samples}};
}

MorseBottProblem problem_from_json(const json& j) {
    MorseBottProblem p = builtin_problem(j.at("id").get<std::string>());
    p.grad_tol = j.value("grad_tol", p.grad_tol);
    p.shooting_samples = j.value("shooting_samples", p.shooting_samples);
    if (p.grad_tol <= 0.0 || p.shooting_samples < 8) throw ValidationError("cascade problem: bad shooting settings");
    return p;
}

json to_json(const CascadeComplexData& c) {
    json gens = json::array(), diff = json::object();
    for (const auto& g : c.generators)
        gens.push_back({{"manifold", g.manifold}, {"aux", g.aux}, {"degree", g.degree}, {"label", g.label}});
    for (const auto& [k, d] : c.differential) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            std::vector<int> row;
            for (Eigen::Index jj = 0; jj < d.cols(); ++jj) row.push_back(d(i, jj));
            rows.push_back(row);
        }
        diff[std::to_string(k)] = rows;
    }
    return {{"generators", gens}, {"differential", diff}, {"betti", c.betti}};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

void write_json_file(const std::string& path, const json& j, int indent) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(indent) << "\n";
}

}  // namespace splitlab
