#include "delayou/catalog.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace delayou {

namespace {

std::mutex g_mutex;

std::map<std::string, DelaySystem>& systems() {
    static std::map<std::string, DelaySystem> m;
    return m;
}
std::map<std::string, PastFunctional>& pfs() {
    static std::map<std::string, PastFunctional> m;
    return m;
}
std::map<std::string, ScalarFunction>& phibars() {
    static std::map<std::string, ScalarFunction> m;
    return m;
}
std::map<std::string, Nonlinearity>& psis() {
    static std::map<std::string, Nonlinearity> m;
    return m;
}

Matrix scalar(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

DelayMeasure unit_density(double d) {
    DelayMeasure mu;
    mu.d = d;
    mu.density = {scalar(1.0), scalar(1.0)};
    return mu;
}

void ensure_init() {
    static std::once_flag once;
    std::call_once(once, [] {
        // S1: driftless scalar system, noise only.
        DelaySystem s1;
        s1.n = 1;
        s1.d = 1.0;
        s1.a0 = scalar(0.0);
        s1.a1.d = 1.0;
        s1.sigma = scalar(1.0);
        systems()["S1"] = s1;

        // S2: stable scalar system with a point delay at -1/2.
        DelaySystem s2 = s1;
        s2.a0 = scalar(-1.0);
        s2.a1.atoms = {{-0.5, scalar(0.5)}};
        systems()["S2"] = s2;

        // S3: same dynamics as S2; paired with the degenerate-head reduction.
        systems()["S3"] = s2;

        PastFunctional head;
        head.alpha0 = scalar(1.0);
        head.tail_measure.d = 1.0;
        head.regime = Regime::A1;
        pfs()["head"] = head;

        PastFunctional hpd = head;
        hpd.tail_measure = unit_density(1.0);
        pfs()["head_plus_density"] = hpd;

        PastFunctional dens;
        dens.alpha0 = scalar(0.0);
        dens.tail_measure = unit_density(1.0);
        dens.regime = Regime::A2;
        pfs()["density_only"] = dens;

        ScalarFunction f;
        f.name = "indicator";
        f.value = [](const Vector& y) { return y[0] > 0.0 ? 1.0 : 0.0; };
        f.smoothness = Smoothness::Bounded;
        f.sup_norm = 1.0;
        f.is_indicator = true;
        phibars()[f.name] = f;

        f = ScalarFunction{};
        f.name = "tanh";
        f.value = [](const Vector& y) { return std::tanh(y[0]); };
        f.gradient = [](const Vector& y) {
            Vector g = Vector::Zero(y.size());
            double t = std::tanh(y[0]);
            g[0] = 1.0 - t * t;
            return g;
        };
        f.smoothness = Smoothness::C1;
        f.sup_norm = 1.0;
        phibars()[f.name] = f;

        f = ScalarFunction{};
        f.name = "cos";
        f.value = [](const Vector& y) { return std::cos(y[0]); };
        f.gradient = [](const Vector& y) {
            Vector g = Vector::Zero(y.size());
            g[0] = -std::sin(y[0]);
            return g;
        };
        f.smoothness = Smoothness::C1;
        f.sup_norm = 1.0;
        phibars()[f.name] = f;

        f = ScalarFunction{};
        f.name = "smoothstep";
        f.value = [](const Vector& y) {
            double u = std::clamp(0.5 * (y[0] + 1.0), 0.0, 1.0);
            return u * u * (3.0 - 2.0 * u);
        };
        f.gradient = [](const Vector& y) {
            Vector g = Vector::Zero(y.size());
            double u = 0.5 * (y[0] + 1.0);
            if (u > 0.0 && u < 1.0) g[0] = 0.5 * (6.0 * u - 6.0 * u * u);
            return g;
        };
        f.smoothness = Smoothness::C1;
        f.sup_norm = 1.0;
        phibars()[f.name] = f;

        f = ScalarFunction{};
        f.name = "const";
        f.value = [](const Vector&) { return 1.0; };
        f.gradient = [](const Vector& y) { return Vector(Vector::Zero(y.size())); };
        f.smoothness = Smoothness::C1;
        f.sup_norm = 1.0;
        phibars()[f.name] = f;

        Nonlinearity p;
        p.name = "zero";
        p.psi = [](double, const Vector&) { return 0.0; };
        p.lipschitz = 0.0;
        psis()[p.name] = p;

        p = Nonlinearity{};
        p.name = "one";
        p.psi = [](double, const Vector&) { return 1.0; };
        p.lipschitz = 0.0;
        psis()[p.name] = p;

        p = Nonlinearity{};
        p.name = "cv";
        p.psi = [](double v, const Vector&) { return 0.5 * v; };
        p.lipschitz = 0.5;
        psis()[p.name] = p;

        p = Nonlinearity{};
        p.name = "neg_z1";
        p.psi = [](double, const Vector& z) { return -z[0]; };
        p.lipschitz = 1.0;
        p.gradient_only = true;
        psis()[p.name] = p;
    });
}

template <class M>
typename M::mapped_type lookup(M& m, const std::string& name, const char* kind) {
    auto it = m.find(name);
    if (it == m.end()) throw std::out_of_range(std::string("unknown ") + kind + ": " + name);
    return it->second;
}

} // namespace

DelaySystem catalog_system(const std::string& name) {
    ensure_init();
    std::lock_guard<std::mutex> lock(g_mutex);
    return lookup(systems(), name, "system");
}

PastFunctional catalog_pf(const std::string& name) {
    ensure_init();
    std::lock_guard<std::mutex> lock(g_mutex);
    return lookup(pfs(), name, "past functional");
}

PastFunctional default_pf_for(const std::string& system_name) {
    if (system_name == "S1") return catalog_pf("head");
    if (system_name == "S2") return catalog_pf("head_plus_density");
    if (system_name == "S3") return catalog_pf("density_only");
    throw std::out_of_range("no default reduction for system: " + system_name);
}

ScalarFunction catalog_phibar(const std::string& name) {
    ensure_init();
    std::lock_guard<std::mutex> lock(g_mutex);
    return lookup(phibars(), name, "observable");
}

ReducedDrift catalog_drift(const std::string& name, const PastFunctional& pf) {
    ensure_init();
    ReducedDrift d;
    d.pf = pf;
    d.name = name;
    if (name == "zero") {
        d.bbar = [](double, const Vector& y) { return Vector(Vector::Zero(y.size())); };
        d.jacobian = [](double, const Vector& y) {
            return Matrix(Matrix::Zero(y.size(), y.size()));
        };
        d.lipschitz = 0.0;
        d.sup_bound = 0.0;
    } else if (name == "tanh") {
        d.bbar = [](double, const Vector& y) {
            Vector b(y.size());
            for (int i = 0; i < y.size(); ++i) b[i] = std::tanh(y[i]);
            return b;
        };
        d.jacobian = [](double, const Vector& y) {
            Matrix j = Matrix::Zero(y.size(), y.size());
            for (int i = 0; i < y.size(); ++i) {
                double t = std::tanh(y[i]);
                j(i, i) = 1.0 - t * t;
            }
            return j;
        };
        d.lipschitz = 1.0;
        d.sup_bound = 1.0;
    } else if (name == "const_half") {
        d.bbar = [](double, const Vector& y) {
            return Vector(Vector::Constant(y.size(), 0.5));
        };
        d.jacobian = [](double, const Vector& y) {
            return Matrix(Matrix::Zero(y.size(), y.size()));
        };
        d.lipschitz = 0.0;
        d.sup_bound = 0.5;
    } else {
        throw std::out_of_range("unknown drift: " + name);
    }
    return d;
}

Nonlinearity catalog_psi(const std::string& name) {
    ensure_init();
    std::lock_guard<std::mutex> lock(g_mutex);
    return lookup(psis(), name, "nonlinearity");
}

ControlProblem catalog_problem(const std::string& name) {
    ensure_init();
    if (name != "s1_quadratic") throw std::out_of_range("unknown problem: " + name);
    ControlProblem pr;
    pr.sys = catalog_system("S1");
    pr.pf = catalog_pf("head");
    pr.U.lo = Vector::Constant(1, -1.0);
    pr.U.hi = Vector::Constant(1, 1.0);
    pr.g.name = "quadratic";
    pr.g.g = [](const Vector& u) { return u.squaredNorm(); };
    pr.g.quadratic = true;
    pr.phibar = catalog_phibar("tanh");
    pr.T = 0.5;
    pr.x0 = Segment::zero(1, 1.0, 50);
    return pr;
}

void register_system(const std::string& name, const DelaySystem& sys) {
    ensure_init();
    sys.validate();
    std::lock_guard<std::mutex> lock(g_mutex);
    systems()[name] = sys;
}

void register_pf(const std::string& name, const PastFunctional& pf) {
    ensure_init();
    std::lock_guard<std::mutex> lock(g_mutex);
    pfs()[name] = pf;
}

void register_phibar(const ScalarFunction& f) {
    ensure_init();
    if (f.name.empty() || !f.value) throw std::invalid_argument("observable needs name and value");
    std::lock_guard<std::mutex> lock(g_mutex);
    phibars()[f.name] = f;
}

void register_psi(const Nonlinearity& psi) {
    ensure_init();
    if (psi.name.empty() || !psi.psi)
        throw std::invalid_argument("nonlinearity needs name and psi");
    std::lock_guard<std::mutex> lock(g_mutex);
    psis()[psi.name] = psi;
}

CatalogListing list_catalog() {
    ensure_init();
    std::lock_guard<std::mutex> lock(g_mutex);
    CatalogListing out;
    for (const auto& [k, v] : systems()) out.systems.push_back(k);
    for (const auto& [k, v] : pfs()) out.pfs.push_back(k);
    for (const auto& [k, v] : phibars()) out.phibars.push_back(k);
    out.drifts = {"const_half", "tanh", "zero"};
    for (const auto& [k, v] : psis()) out.psis.push_back(k);
    out.problems = {"s1_quadratic"};
    return out;
}

} // namespace delayou
