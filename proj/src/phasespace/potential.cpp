#include "qcl/phasespace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qcl {

Potential Potential::cosine(double amplitude, double frequency)
{
    require(frequency > 0, "cosine potential needs a positive frequency");
    Potential V;
    V.kind_ = Kind::Cosine;
    V.a_ = amplitude;
    V.k_ = frequency;
    V.sup_v_ = std::abs(amplitude);
    V.sup_g_ = std::abs(amplitude) * frequency;
    V.lip_ = std::abs(amplitude) * frequency * frequency;
    return V;
}

Potential Potential::gaussian_bump(double amplitude, double width)
{
    require(width > 0, "gaussian bump needs a positive width");
    Potential V;
    V.kind_ = Kind::GaussianBump;
    V.a_ = amplitude;
    V.k_ = width;
    V.sup_v_ = std::abs(amplitude);
    V.sup_g_ = std::abs(amplitude) / (width * std::sqrt(std::exp(1.0)));
    V.lip_ = std::abs(amplitude) / (width * width);
    return V;
}

Potential Potential::zero()
{
    return Potential{};
}

Potential Potential::parse(const std::string& tag)
{
    std::vector<std::string> parts;
    std::stringstream ss(tag);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    require(!parts.empty(), "empty potential tag");
    auto num = [&](std::size_t i, double fallback) {
        return i < parts.size() ? std::stod(parts[i]) : fallback;
    };
    if (parts[0] == "cos") return cosine(num(1, 1.0), num(2, 1.0));
    if (parts[0] == "gauss") return gaussian_bump(num(1, 1.0), num(2, 1.0));
    if (parts[0] == "zero") return zero();
    throw PreconditionError("unknown potential tag: " + tag);
}

std::string Potential::tag() const
{
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
    case Kind::Cosine: os << "cos:" << a_ << ":" << k_; break;
    case Kind::GaussianBump: os << "gauss:" << a_ << ":" << k_; break;
    case Kind::Zero: os << "zero"; break;
    }
    return os.str();
}

double Potential::value(double x) const
{
    switch (kind_) {
    case Kind::Cosine: return a_ * std::cos(k_ * x);
    case Kind::GaussianBump: return a_ * std::exp(-0.5 * x * x / (k_ * k_));
    case Kind::Zero: return 0.0;
    }
    return 0.0;
}

double Potential::gradient(double x) const
{
    switch (kind_) {
    case Kind::Cosine: return -a_ * k_ * std::sin(k_ * x);
    case Kind::GaussianBump: return -a_ * x / (k_ * k_) * std::exp(-0.5 * x * x / (k_ * k_));
    case Kind::Zero: return 0.0;
    }
    return 0.0;
}

void Potential::check_hypotheses(double radius, int samples) const
{
    const double tol = 1e-12;
    std::vector<double> xs(samples);
    for (int i = 0; i < samples; ++i) xs[i] = -radius + 2.0 * radius * i / (samples - 1);
    for (double x : xs) {
        if (std::abs(value(x) - value(-x)) > tol) throw PreconditionError("potential is not even");
        if (std::abs(value(x)) > sup_v_ + tol) throw PreconditionError("sup |V| bound violated");
        if (std::abs(gradient(x)) > sup_g_ + tol) throw PreconditionError("sup |grad V| bound violated");
    }
    auto lip_ok = [&](double a, double b) {
        return std::abs(gradient(a) - gradient(b)) <= lip_ * std::abs(a - b) + tol;
    };
    for (int i = 0; i + 1 < samples; ++i) {
        if (!lip_ok(xs[i], xs[i + 1]) || !lip_ok(xs[i], xs[(i * 7919 + 13) % samples]))
            throw PreconditionError("Lipschitz bound on grad V violated");
    }
}

double lambda_rate(const Potential& V)
{
    double L = V.lipschitz_gradV();
    return 1.0 + std::max(1.0, 4.0 * L * L);
}

double gamma_rate(const Potential& V)
{
    double L = V.lipschitz_gradV();
    return 2.0 + std::max(4.0 * L * L, 1.0);
}

}  // namespace qcl
