#include "sbrrm/channel.hpp"

#include <cmath>
#include <json.hpp>

namespace sbrrm {

using nlohmann::json;

Eigen::VectorXcd steering_vector(const PlanarArray& array, double azimuth_rad,
                                 double elevation_rad) {
  Eigen::VectorXcd a(array.count());
  const double kv = std::sin(elevation_rad);
  const double kh = std::sin(azimuth_rad) * std::cos(elevation_rad);
  int i = 0;
  for (int m = 0; m < array.rows; ++m) {
    for (int n = 0; n < array.cols; ++n) {
      const double phase = 2.0 * M_PI * array.spacing_wavelengths * (m * kv + n * kh);
      a(i++) = std::polar(1.0, phase);
    }
  }
  return a;
}

void relative_angles(const Eigen::Vector3d& origin, const Eigen::Vector3d& boresight,
                     const Eigen::Vector3d& target, double& azimuth_rad,
                     double& elevation_rad) {
  const Eigen::Vector3d d = target - origin;
  const double az_bore = std::atan2(boresight.y(), boresight.x());
  const double az_abs = std::atan2(d.y(), d.x());
  azimuth_rad = std::remainder(az_abs - az_bore, 2.0 * M_PI);
  const double horiz = std::hypot(d.x(), d.y());
  elevation_rad = std::atan2(d.z(), horiz);
}

double uma_los_pathloss_db(double distance_m, double carrier_hz) {
  const double d = std::max(distance_m, 1.0);
  const double f_ghz = carrier_hz / 1e9;
  return 28.0 + 22.0 * std::log10(d) + 20.0 * std::log10(f_ghz);
}

double umi_los_pathloss_db(double distance_m, double carrier_hz) {
  const double d = std::max(distance_m, 1.0);
  const double f_ghz = carrier_hz / 1e9;
  return 32.4 + 21.0 * std::log10(d) + 20.0 * std::log10(f_ghz);
}

double umi_nlos_pathloss_db(double distance_m, double carrier_hz) {
  const double d = std::max(distance_m, 1.0);
  const double f_ghz = carrier_hz / 1e9;
  return 22.4 + 35.3 * std::log10(d) + 21.3 * std::log10(f_ghz);
}

double umi_los_probability(double distance_2d_m) {
  const double d = std::max(distance_2d_m, 1e-3);
  if (d <= 18.0) return 1.0;
  return 18.0 / d + std::exp(-d / 36.0) * (1.0 - 18.0 / d);
}

namespace {

double shadow_linear(double sigma_db, RandomStream& stream, bool enabled) {
  if (!enabled || sigma_db <= 0.0) return 1.0;
  return std::pow(10.0, sigma_db * stream.normal() / 10.0);
}

PlanarArray mbs_planar_array(const SystemConfig& cfg, const Topology& topo) {
  return {cfg.mbs_array.rows, cfg.mbs_array.cols, 0.5, topo.mbs_boresight};
}

PlanarArray sbs_planar_array(const SystemConfig& cfg, const ClusterTopology& cl, int b) {
  return {cfg.sbs_array.rows, cfg.sbs_array.cols, 0.5, cl.sbs_boresights[b]};
}

}  // namespace

std::vector<Eigen::VectorXcd> generate_backhaul_channels(const Topology& topology,
                                                         const SystemConfig& cfg,
                                                         const ChannelModelParams& params,
                                                         std::uint64_t seed) {
  const RandomStream root(seed);
  const PlanarArray mbs = mbs_planar_array(cfg, topology);
  std::vector<Eigen::VectorXcd> g(cfg.total_sbs());
  for (int l = 0; l < cfg.num_clusters; ++l) {
    const ClusterTopology& cl = topology.clusters[l];
    for (int b = 0; b < cfg.sbs_per_cluster; ++b) {
      const int sbs = cfg.sbs_index(l, b);
      RandomStream stream = root.stream("backhaul", static_cast<std::uint64_t>(sbs));
      const Eigen::Vector3d pos = cl.sbs_positions[b];
      const double dist = (pos - topology.mbs_position).norm();
      const double pl_db = uma_los_pathloss_db(dist, params.carrier_hz);
      const double gain = std::pow(10.0, -pl_db / 10.0) *
                          shadow_linear(params.backhaul_shadow_sigma_db, stream,
                                        params.enable_shadowing);
      double az = 0.0, el = 0.0;
      relative_angles(topology.mbs_position, topology.mbs_boresight, pos, az, el);
      g[sbs] = std::sqrt(gain) * steering_vector(mbs, az, el);
    }
  }
  return g;
}

std::vector<std::vector<Eigen::VectorXcd>> generate_access_channels(
    const Topology& topology, const SystemConfig& cfg, const ChannelModelParams& params,
    std::uint64_t seed) {
  const RandomStream root(seed);
  const double k_lin = std::pow(10.0, params.rician_k_db / 10.0);
  std::vector<std::vector<Eigen::VectorXcd>> h(
      cfg.total_sbs(), std::vector<Eigen::VectorXcd>(cfg.total_ue()));
  for (int lb = 0; lb < cfg.num_clusters; ++lb) {
    const ClusterTopology& cl_b = topology.clusters[lb];
    for (int b = 0; b < cfg.sbs_per_cluster; ++b) {
      const int sbs = cfg.sbs_index(lb, b);
      const PlanarArray array = sbs_planar_array(cfg, cl_b, b);
      const Eigen::Vector3d sbs_pos = cl_b.sbs_positions[b];
      for (int lu = 0; lu < cfg.num_clusters; ++lu) {
        for (int u = 0; u < cfg.ue_per_cluster; ++u) {
          const int ue = cfg.ue_index(lu, u);
          RandomStream stream =
              root.stream("access", static_cast<std::uint64_t>(sbs) * cfg.total_ue() + ue);
          const Eigen::Vector3d ue_pos = topology.clusters[lu].ue_positions[u];
          const double d3 = (ue_pos - sbs_pos).norm();
          const double d2 = std::hypot(ue_pos.x() - sbs_pos.x(), ue_pos.y() - sbs_pos.y());
          double p_los = umi_los_probability(d2);
          if (params.los_probability_override >= 0.0)
            p_los = params.los_probability_override;
          const bool los = stream.uniform() < p_los;
          const double pl_db = los ? umi_los_pathloss_db(d3, params.carrier_hz)
                                   : umi_nlos_pathloss_db(d3, params.carrier_hz);
          const double sigma_db = los ? params.access_shadow_sigma_los_db
                                      : params.access_shadow_sigma_nlos_db;
          const double gain = std::pow(10.0, -pl_db / 10.0) *
                              shadow_linear(sigma_db, stream, params.enable_shadowing);
          const int n = cfg.sbs_antennas();
          Eigen::VectorXcd small(n);
          if (los) {
            double az = 0.0, el = 0.0;
            relative_angles(sbs_pos, array.boresight, ue_pos, az, el);
            const Eigen::VectorXcd mean = steering_vector(array, az, el);
            const double c_mean = std::sqrt(k_lin / (k_lin + 1.0));
            const double c_scatter = std::sqrt(1.0 / (k_lin + 1.0));
            for (int i = 0; i < n; ++i)
              small(i) = c_mean * mean(i) + c_scatter * stream.complex_normal();
          } else {
            for (int i = 0; i < n; ++i) small(i) = stream.complex_normal();
          }
          h[sbs][ue] = std::sqrt(gain) * small;
        }
      }
    }
  }
  return h;
}

ChannelSet generate_channels(const Topology& topology, const SystemConfig& cfg,
                             const ChannelModelParams& params, std::uint64_t seed) {
  ChannelSet set;
  set.backhaul = generate_backhaul_channels(topology, cfg, params, seed);
  set.access = generate_access_channels(topology, cfg, params, seed);
  set.carrier_hz = params.carrier_hz;
  set.seed_provenance = "seed=" + std::to_string(seed);
  return set;
}

ChannelSet perturb_channels(const ChannelSet& channels, const PerturbationSpec& spec) {
  ChannelSet out = channels;
  if (spec.chi == 0.0) return out;
  const RandomStream root(spec.seed);
  const double keep = std::sqrt(std::max(0.0, 1.0 - spec.chi * spec.chi));
  auto mix = [&](Eigen::VectorXcd& c, RandomStream stream) {
    const int k = static_cast<int>(c.size());
    if (k == 0) return;
    const double scale = spec.chi * c.norm() / std::sqrt(static_cast<double>(k));
    for (int i = 0; i < k; ++i) c(i) = keep * c(i) + scale * stream.complex_normal();
  };
  if (spec.scope != PerturbationScope::access) {
    for (std::size_t b = 0; b < out.backhaul.size(); ++b)
      mix(out.backhaul[b], root.stream("perturb.backhaul", b));
  }
  if (spec.scope != PerturbationScope::backhaul) {
    for (std::size_t b = 0; b < out.access.size(); ++b)
      for (std::size_t u = 0; u < out.access[b].size(); ++u)
        mix(out.access[b][u],
            root.stream("perturb.access", b * out.access[b].size() + u));
  }
  out.seed_provenance += " perturbed(chi=" + std::to_string(spec.chi) + ")";
  return out;
}

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
}

json cvec_to_json(const Eigen::VectorXcd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) {
    arr.push_back(v(i).real());
    arr.push_back(v(i).imag());
  }
  return arr;
}

Eigen::VectorXcd cvec_from_json(const json& arr) {
  Eigen::VectorXcd v(arr.size() / 2);
  for (int i = 0; i < v.size(); ++i)
    v(i) = std::complex<double>(arr[2 * i].get<double>(), arr[2 * i + 1].get<double>());
  return v;
}

}  // namespace

std::string channel_hash(const ChannelSet& channels) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const Eigen::VectorXcd& g : channels.backhaul)
    hash_bytes(h, g.data(), sizeof(std::complex<double>) * g.size());
  for (const auto& row : channels.access)
    for (const Eigen::VectorXcd& v : row)
      hash_bytes(h, v.data(), sizeof(std::complex<double>) * v.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string channels_to_json(const ChannelSet& channels) {
  json j;
  j["carrier_hz"] = channels.carrier_hz;
  j["seed_provenance"] = channels.seed_provenance;
  json g = json::array();
  for (const Eigen::VectorXcd& v : channels.backhaul) g.push_back(cvec_to_json(v));
  j["backhaul"] = std::move(g);
  json h = json::array();
  for (const auto& row : channels.access) {
    json r = json::array();
    for (const Eigen::VectorXcd& v : row) r.push_back(cvec_to_json(v));
    h.push_back(std::move(r));
  }
  j["access"] = std::move(h);
  return j.dump();
}

ChannelSet channels_from_json(const std::string& text) {
  const json j = json::parse(text);
  ChannelSet set;
  set.carrier_hz = j.at("carrier_hz").get<double>();
  set.seed_provenance = j.value("seed_provenance", "");
  for (const json& v : j.at("backhaul")) set.backhaul.push_back(cvec_from_json(v));
  for (const json& row : j.at("access")) {
    std::vector<Eigen::VectorXcd> r;
    for (const json& v : row) r.push_back(cvec_from_json(v));
    set.access.push_back(std::move(r));
  }
  return set;
}

}  // namespace sbrrm
