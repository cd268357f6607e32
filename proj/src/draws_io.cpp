#include "dpmliv/draws_io.hpp"

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "dpmliv/error.hpp"
#include "dpmliv/text.hpp"
#include "json.hpp"

namespace dpmliv {

namespace {

std::string idx(const std::string& prefix, std::size_t k) { return prefix + "_" + std::to_string(k + 1); }

struct Layout {
  std::size_t p = 0, h1 = 0, h0 = 0, n = 0, n1 = 0, n0 = 0;
  bool latent = false;
};

std::vector<std::string> header(const Layout& l) {
  std::vector<std::string> h{"treat_intercept", "treat_gamma"};
  for (std::size_t k = 0; k < l.p; ++k) h.push_back(idx("treat_beta", k));
  h.push_back("treat_loading");
  for (const char* arm : {"y1", "y0"}) {
    const std::string a(arm);
    h.push_back(a + "_intercept");
    for (std::size_t k = 0; k < l.p; ++k) h.push_back(idx(a + "_beta", k));
    h.push_back(a + "_loading");
  }
  for (const char* arm : {"dpm1", "dpm0"}) {
    const std::string a(arm);
    for (const char* f : {"concentration", "base_mean", "base_var", "hyper_mean", "hyper_var", "mu_bar", "sigma2_bar"})
      h.push_back(a + "_" + f);
    const std::size_t hh = a == "dpm1" ? l.h1 : l.h0;
    for (const char* f : {"stick", "weight", "mean", "var", "count"})
      for (std::size_t j = 0; j < hh; ++j) h.push_back(idx(a + "_" + f, j));
  }
  for (std::size_t i = 0; i < l.n; ++i) h.push_back(idx("theta", i));
  if (l.latent) {
    for (std::size_t i = 0; i < l.n; ++i) h.push_back(idx("d_star", i));
    for (std::size_t i = 0; i < l.n1; ++i) h.push_back(idx("dpm1_alloc", i));
    for (std::size_t i = 0; i < l.n0; ++i) h.push_back(idx("dpm0_alloc", i));
  }
  return h;
}

Layout layout_of(const ParamState& s) {
  Layout l;
  l.p = static_cast<std::size_t>(s.treatment.beta.size());
  l.h1 = s.dpm1.size();
  l.h0 = s.dpm0.size();
  l.n = static_cast<std::size_t>(s.theta.size());
  l.latent = s.d_star.size() > 0;
  l.n1 = s.dpm1.allocations.size();
  l.n0 = s.dpm0.allocations.size();
  return l;
}

std::size_t count_prefix(const std::vector<std::string>& cols, const std::string& prefix) {
  std::size_t k = 0;
  for (const auto& c : cols)
    if (c.rfind(prefix, 0) == 0) ++k;
  return k;
}

}  // namespace

void write_draws(const PosteriorDraws& draws, const std::filesystem::path& path) {
  if (draws.iterations.empty()) throw InvalidArgument("write_draws: no retained draws");
  const Layout l = layout_of(draws.iterations.front());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const nlohmann::json meta{{"chain_id", draws.chain_id}, {"variant", to_string(draws.variant)}, {"config", to_json(draws.meta)}};
  out << "# " << meta.dump() << '\n';
  const auto cols = header(l);
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';

  std::string row;
  auto put = [&](double v) {
    if (!row.empty()) row += ',';
    row += text::format_double(v);
  };
  auto put_int = [&](std::int64_t v) {
    if (!row.empty()) row += ',';
    row += std::to_string(v);
  };
  for (const auto& s : draws.iterations) {
    const Layout ls = layout_of(s);
    if (ls.p != l.p || ls.h1 != l.h1 || ls.h0 != l.h0 || ls.n != l.n || ls.latent != l.latent || ls.n1 != l.n1 ||
        ls.n0 != l.n0)
      throw InvalidArgument("write_draws: retained states differ in shape");
    row.clear();
    put(s.treatment.intercept);
    put(s.treatment.gamma);
    for (auto v : s.treatment.beta) put(v);
    put(s.treatment.loading);
    for (const auto* o : {&s.outcome1, &s.outcome0}) {
      put(o->intercept);
      for (auto v : o->beta) put(v);
      put(o->loading);
    }
    for (const auto* d : {&s.dpm1, &s.dpm0}) {
      put(d->concentration);
      put(d->base_mean);
      put(d->base_var);
      put(d->hyper_mean);
      put(d->hyper_var);
      put(d->allocation_mean());
      put(d->allocation_variance());
      for (auto v : d->sticks) put(v);
      for (auto v : d->weights) put(v);
      for (auto v : d->means) put(v);
      for (auto v : d->vars) put(v);
      for (auto c : d->counts) put_int(c);
    }
    for (auto v : s.theta) put(v);
    if (l.latent) {
      for (auto v : s.d_star) put(v);
      for (auto a : s.dpm1.allocations) put_int(a);
      for (auto a : s.dpm0.allocations) put_int(a);
    }
    out << row << '\n';
  }
  if (!out) throw IoError("error writing " + path.string());
}

PosteriorDraws read_draws(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open draws file " + path.string());
  std::string line;
  PosteriorDraws out;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw IngestionError("draws file lacks the metadata line");
  try {
    const auto meta = nlohmann::json::parse(line.substr(2));
    out.chain_id = meta.at("chain_id").get<int>();
    out.variant = variant_from_string(meta.at("variant").get<std::string>());
    out.meta = config_from_json(meta.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("bad draws metadata: ") + e.what());
  }
  if (!std::getline(in, line)) throw IngestionError("draws file lacks a header");
  const auto cols = text::split_csv_line(line);
  Layout l;
  l.p = count_prefix(cols, "treat_beta_");
  l.h1 = count_prefix(cols, "dpm1_stick_");
  l.h0 = count_prefix(cols, "dpm0_stick_");
  l.n = count_prefix(cols, "theta_");
  l.latent = count_prefix(cols, "d_star_") > 0;
  l.n1 = count_prefix(cols, "dpm1_alloc_");
  l.n0 = count_prefix(cols, "dpm0_alloc_");
  if (cols != header(l)) throw IngestionError("draws header does not match the expected layout");

  std::size_t row_no = 2;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto f = text::split_csv_line(line);
    if (f.size() != cols.size())
      throw IngestionError("draws row " + std::to_string(row_no) + " has " + std::to_string(f.size()) + " fields, expected " +
                               std::to_string(cols.size()),
                           row_no);
    std::size_t c = 0;
    auto num = [&]() {
      const auto v = text::parse_double(f[c]);
      if (!v) throw IngestionError("non-numeric value in draws row " + std::to_string(row_no), row_no, cols[c]);
      ++c;
      return *v;
    };
    auto vec = [&](std::size_t k) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(k));
      for (std::size_t j = 0; j < k; ++j) v[static_cast<Eigen::Index>(j)] = num();
      return v;
    };
    auto ints = [&](std::size_t k) {
      std::vector<std::int32_t> v(k);
      for (auto& x : v) x = static_cast<std::int32_t>(num());
      return v;
    };
    ParamState s;
    s.treatment.intercept = num();
    s.treatment.gamma = num();
    s.treatment.beta = vec(l.p);
    s.treatment.loading = num();
    for (auto* o : {&s.outcome1, &s.outcome0}) {
      o->intercept = num();
      o->beta = vec(l.p);
      o->loading = num();
    }
    for (auto* d : {&s.dpm1, &s.dpm0}) {
      const std::size_t h = d == &s.dpm1 ? l.h1 : l.h0;
      d->concentration = num();
      d->base_mean = num();
      d->base_var = num();
      d->hyper_mean = num();
      d->hyper_var = num();
      c += 2;  // derived summaries
      d->sticks = vec(h);
      d->weights = vec(h);
      d->means = vec(h);
      d->vars = vec(h);
      d->counts = ints(h);
    }
    s.theta = vec(l.n);
    if (l.latent) {
      s.d_star = vec(l.n);
      s.dpm1.allocations = ints(l.n1);
      s.dpm0.allocations = ints(l.n0);
    }
    out.iterations.push_back(std::move(s));
  }
  return out;
}

}  // namespace dpmliv
