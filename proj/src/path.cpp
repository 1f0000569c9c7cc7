#include "bmpcc/path.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace bmpcc {

ReferencePath::ReferencePath(std::vector<PathSample> samples, std::vector<double> lane_markers,
                             double ds_max)
    : samples_(std::move(samples)), lane_markers_(std::move(lane_markers)) {
  if (samples_.size() < 2) throw std::invalid_argument("ReferencePath: need at least two samples");
  if (samples_.front().theta != 0.0) throw std::invalid_argument("ReferencePath: theta must start at 0");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const PathSample& s = samples_[i];
    if (!(s.d_lb > 0.0) || !(s.d_rb > 0.0)) {
      throw std::invalid_argument("ReferencePath: boundary distances must be positive");
    }
    if (i == 0) continue;
    const PathSample& p = samples_[i - 1];
    const double ds = s.theta - p.theta;
    if (!(ds > 0.0)) throw std::invalid_argument("ReferencePath: theta must be strictly increasing");
    if (ds > ds_max + 1e-9) throw std::invalid_argument("ReferencePath: sample spacing exceeds ds_max");
    if (std::abs(s.psi - p.psi) >= std::numbers::pi) {
      throw std::invalid_argument("ReferencePath: heading jump between samples");
    }
  }
}

std::size_t ReferencePath::segment(double theta) const {
  auto it = std::upper_bound(samples_.begin(), samples_.end(), theta,
                             [](double t, const PathSample& s) { return t < s.theta; });
  std::size_t i = static_cast<std::size_t>(std::distance(samples_.begin(), it));
  i = (i == 0) ? 0 : i - 1;
  return std::min(i, samples_.size() - 2);
}

PathPose<double> ReferencePath::query(double theta) const {
  if (!(theta >= 0.0) || theta > theta_max()) {
    throw std::domain_error("ReferencePath::query: arclength outside [0, theta_max]");
  }
  return evaluate(theta);
}

double ReferencePath::project(const Vec2& p) const {
  double best_theta = 0.0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
    const Vec2 a(samples_[i].x, samples_[i].y);
    const Vec2 b(samples_[i + 1].x, samples_[i + 1].y);
    const Vec2 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const double d2 = (a + t * ab - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best_theta = samples_[i].theta + t * (samples_[i + 1].theta - samples_[i].theta);
    }
  }
  return best_theta;
}

ReferencePath ReferencePath::with_lane_markers(std::vector<double> markers) const {
  ReferencePath copy = *this;
  copy.lane_markers_ = std::move(markers);
  return copy;
}

ContourLag<double> contour_lag_errors(const ReferencePath& path, double x, double y, double theta) {
  return contour_lag_errors(path.query(theta), x, y);
}

PathBuilder::PathBuilder(double x, double y, double heading) : x_(x), y_(y), heading_(heading) {}

PathBuilder& PathBuilder::line(double length) {
  if (!(length > 0.0)) throw std::invalid_argument("PathBuilder::line: length must be positive");
  pieces_.push_back({x_, y_, heading_, length, 0.0});
  x_ += length * std::cos(heading_);
  y_ += length * std::sin(heading_);
  return *this;
}

PathBuilder& PathBuilder::arc(double radius, double sweep) {
  if (!(radius > 0.0) || sweep == 0.0) throw std::invalid_argument("PathBuilder::arc: bad arc");
  const double curvature = (sweep > 0.0 ? 1.0 : -1.0) / radius;
  const double length = radius * std::abs(sweep);
  pieces_.push_back({x_, y_, heading_, length, curvature});
  const PathSample end = sample_at(this->length());
  x_ = end.x;
  y_ = end.y;
  heading_ = end.psi;
  return *this;
}

double PathBuilder::length() const {
  double total = 0.0;
  for (const Piece& p : pieces_) total += p.length;
  return total;
}

PathSample PathBuilder::sample_at(double theta) const {
  double start = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const Piece& p = pieces_[i];
    if (theta <= start + p.length || i + 1 == pieces_.size()) {
      const double s = std::clamp(theta - start, 0.0, p.length);
      PathSample out;
      out.theta = theta;
      if (p.curvature == 0.0) {
        out.x = p.x0 + s * std::cos(p.psi0);
        out.y = p.y0 + s * std::sin(p.psi0);
        out.psi = p.psi0;
      } else {
        const double r = 1.0 / p.curvature;
        out.psi = p.psi0 + s * p.curvature;
        out.x = p.x0 + r * (std::sin(out.psi) - std::sin(p.psi0));
        out.y = p.y0 - r * (std::cos(out.psi) - std::cos(p.psi0));
      }
      return out;
    }
    start += p.length;
  }
  throw std::logic_error("PathBuilder: empty path");
}

ReferencePath PathBuilder::build(double ds, const BoundaryFn& bounds,
                                 std::vector<double> lane_markers) const {
  if (pieces_.empty()) throw std::invalid_argument("PathBuilder::build: no pieces");
  const double total = length();
  const auto n = static_cast<std::size_t>(std::ceil(total / ds - 1e-9));
  std::vector<PathSample> samples;
  samples.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double theta = (i == n) ? total : static_cast<double>(i) * total / static_cast<double>(n);
    PathSample s = sample_at(theta);
    std::tie(s.d_lb, s.d_rb) = bounds(theta);
    samples.push_back(s);
  }
  return ReferencePath(std::move(samples), std::move(lane_markers), ds);
}

ReferencePath PathBuilder::build(double ds, double d_lb, double d_rb,
                                 std::vector<double> lane_markers) const {
  return build(ds, [=](double) { return std::make_pair(d_lb, d_rb); }, std::move(lane_markers));
}

ReferencePath load_path_file(const std::string& filename, std::vector<double> lane_markers) {
  std::ifstream in(filename);
  if (!in) throw std::runtime_error("cannot open path file: " + filename);
  std::vector<PathSample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream fields(line);
    PathSample s;
    if (!(fields >> s.theta)) continue;
    if (!(fields >> s.x >> s.y >> s.psi >> s.d_lb >> s.d_rb)) {
      throw std::runtime_error(filename + ":" + std::to_string(line_no) + ": expected 6 fields");
    }
    samples.push_back(s);
  }
  double ds_max = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    ds_max = std::max(ds_max, samples[i].theta - samples[i - 1].theta);
  }
  return ReferencePath(std::move(samples), std::move(lane_markers),
                       std::max(ds_max, ReferencePath::kDefaultMaxSpacing));
}

void save_path_file(const ReferencePath& path, const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw std::runtime_error("cannot write path file: " + filename);
  out << "# theta, x, y, psi, d_lb, d_rb\n" << std::setprecision(17);
  for (const PathSample& s : path.samples()) {
    out << s.theta << ',' << s.x << ',' << s.y << ',' << s.psi << ',' << s.d_lb << ',' << s.d_rb
        << '\n';
  }
}

}  // namespace bmpcc
