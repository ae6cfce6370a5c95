#include "sga/model/anticipator.hpp"

#include <algorithm>
#include <string>

#include "sga/util/errors.hpp"

namespace sga::model {

template <typename T>
std::size_t Sequence<T>::groups() const {
  if (group.empty()) return 0;
  return *std::max_element(group.begin(), group.end()) + 1;
}

template <typename T>
Anticipator<T>::Anticipator(nn::ParameterStore<T>& store, const std::string& name, std::size_t d_rel,
                            std::size_t ff_dim, std::size_t max_positions, Rng& rng) {
  layer = nn::AttentionLayer<T>(store, name + ".layer", d_rel, ff_dim, rng);
  position_embedding = nn::Embedding<T>(store, name + ".position_embedding", max_positions, d_rel, rng);
}

template <typename T>
BasicTensor<T> Anticipator<T>::predict_next(const Sequence<T>& seq) const {
  if (seq.group.size() != seq.rows.rows() || seq.position.size() != seq.rows.rows()) {
    throw ad::ContractError("anticipator: group/position arrays must have one entry per row");
  }
  for (std::size_t p : seq.position) {
    if (p >= position_embedding.count()) {
      throw ConfigError("encoder.max_positions: anticipation runs past " +
                        std::to_string(position_embedding.count()) + " frames");
    }
  }
  auto mask = nn::group_mask<T>(seq.group, seq.position, true);
  return layer(ad::add(seq.rows, position_embedding(seq.position)), &mask);
}

template <typename T>
Rollout<T> Anticipator<T>::anticipate(const Sequence<T>& context, std::size_t horizon) const {
  Rollout<T> out;
  out.context = context;
  if (horizon == 0) return out;
  const std::size_t groups = context.groups();
  if (context.rows.rows() == 0) throw ad::ContractError("anticipate: empty context");
  std::vector<std::size_t> last_row(groups, static_cast<std::size_t>(-1));
  std::vector<std::size_t> last_pos(groups, 0);
  for (std::size_t r = 0; r < context.group.size(); ++r) {
    const std::size_t g = context.group[r];
    if (last_row[g] == static_cast<std::size_t>(-1) || context.position[r] >= last_pos[g]) {
      last_row[g] = r;
      last_pos[g] = context.position[r];
    }
  }
  for (std::size_t g = 0; g < groups; ++g) {
    if (last_row[g] == static_cast<std::size_t>(-1)) throw ad::ContractError("anticipate: group without context");
  }
  for (std::size_t h = 0; h < horizon; ++h) {
    auto next = ad::gather_rows(predict_next(out.context), last_row);
    out.generated.push_back(next);
    const std::size_t base = out.context.rows.rows();
    out.context.rows = ad::concat<T>({out.context.rows, next}, 0);
    for (std::size_t g = 0; g < groups; ++g) {
      out.context.group.push_back(g);
      out.context.position.push_back(++last_pos[g]);
      last_row[g] = base + g;
    }
  }
  return out;
}

template struct Sequence<float>;
template struct Sequence<double>;
template class Anticipator<float>;
template class Anticipator<double>;

}  // namespace sga::model
