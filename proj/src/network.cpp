#include "s2ica/network.hpp"

namespace s2ica {

namespace {

template <typename T>
bool holds(const LayerSpec& s) {
  return std::holds_alternative<T>(s);
}

[[noreturn]] void reject(std::size_t layer, const std::string& what) {
  throw SpecificationError("layer " + std::to_string(layer) + ": " + what);
}

}  // namespace

std::string layer_kind(const LayerSpec& spec) {
  static const char* names[] = {"conv", "lrn", "subsample", "su", "maxpool", "fc"};
  return names[spec.index()];
}

std::string to_string(Profile profile) {
  switch (profile) {
    case Profile::full: return "full";
    case Profile::toy: return "toy";
    case Profile::custom: return "custom";
  }
  return "custom";
}

Profile profile_from_string(const std::string& name) {
  if (name == "full") return Profile::full;
  if (name == "toy") return Profile::toy;
  if (name == "custom") return Profile::custom;
  throw SpecificationError("unknown network profile '" + name + "'");
}

Index NetworkSpec::last_conv() const {
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (holds<ConvSpec>(layers[i])) return Index(i);
  }
  throw SpecificationError("network has no convolution layer to tap");
}

Index NetworkSpec::count_conv() const {
  return Index(std::count_if(layers.begin(), layers.end(), holds<ConvSpec>));
}

Index NetworkSpec::count_fc() const {
  return Index(std::count_if(layers.begin(), layers.end(), holds<FcSpec>));
}

std::optional<Index> NetworkSpec::su_index() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (holds<SuSpec>(layers[i])) return Index(i);
  }
  return std::nullopt;
}

Index NetworkSpec::classes() const {
  if (layers.empty() || !holds<FcSpec>(layers.back())) {
    throw SpecificationError("network does not end in a fully connected layer");
  }
  return std::get<FcSpec>(layers.back()).out;
}

std::vector<ActivationShape> NetworkSpec::output_shapes() const {
  if (input.height < 1 || input.width < 1 || input.channels < 1) {
    throw SpecificationError("input extents must be positive");
  }
  std::vector<ActivationShape> shapes;
  ActivationShape a = input;
  bool seen_fc = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& spec = layers[i];
    if (seen_fc && !holds<FcSpec>(spec)) reject(i, "spatial layer after a fully connected layer");
    if (const auto* c = std::get_if<ConvSpec>(&spec)) {
      if (c->kernel < 1 || c->stride < 1 || c->pad < 0 || c->out_channels < 1) reject(i, "invalid conv parameters");
      const Index h = window_output_extent(a.height, c->kernel, c->stride, c->pad);
      const Index w = window_output_extent(a.width, c->kernel, c->stride, c->pad);
      if (h < 1 || w < 1) reject(i, "conv kernel larger than padded input");
      a = {h, w, c->out_channels};
    } else if (const auto* s = std::get_if<SubSampleSpec>(&spec)) {
      if (s->window < 1) reject(i, "sub-sampling window must be positive");
      if (a.height < s->window || a.width < s->window) reject(i, "sub-sampling window exceeds input");
      a = {a.height / s->window, a.width / s->window, a.channels};
    } else if (const auto* su = std::get_if<SuSpec>(&spec)) {
      SuConfig cfg{su->blocks, su->probability};
      try {
        cfg.validate();
      } catch (const Error& e) {
        reject(i, e.what());
      }
      if (a.height < cfg.level() || a.width < cfg.level()) reject(i, "map smaller than the shuffle grid");
    } else if (const auto* m = std::get_if<MaxPoolSpec>(&spec)) {
      if (m->window < 1 || m->stride < 1) reject(i, "invalid max-pool parameters");
      if (m->window > a.height || m->window > a.width) reject(i, "max-pool window exceeds input");
      a = {window_output_extent(a.height, m->window, m->stride), window_output_extent(a.width, m->window, m->stride),
           a.channels};
    } else if (const auto* f = std::get_if<FcSpec>(&spec)) {
      if (f->out < 1) reject(i, "fully connected width must be positive");
      a = {1, 1, f->out};
      seen_fc = true;
    }
    shapes.push_back(a);
  }
  return shapes;
}

void NetworkSpec::validate() const {
  output_shapes();
  Index su_count = 0;
  std::optional<std::size_t> first_sub;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (holds<SubSampleSpec>(layers[i]) && !first_sub) first_sub = i;
    if (holds<SuSpec>(layers[i])) {
      ++su_count;
      if (!first_sub || i != *first_sub + 1) {
        reject(i, "the spatially unstructured layer must follow the first sub-sampling layer");
      }
    }
  }
  if (su_count > 1) throw SpecificationError("at most one spatially unstructured layer is allowed");
  if (profile != Profile::custom) {
    if (count_conv() != 5 || count_fc() != 4) {
      throw SpecificationError(to_string(profile) + " profile needs 5 conv and 4 fully connected layers, got " +
                               std::to_string(count_conv()) + " and " + std::to_string(count_fc()));
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (const auto* f = std::get_if<FcSpec>(&layers[i])) {
        if (f->hidden != (i + 1 != layers.size())) {
          reject(i, "hidden fully connected layers use ReLU and the logits layer does not");
        }
      }
    }
  }
}

Index NetworkSpec::parameter_count() const {
  const auto shapes = output_shapes();
  Index n = 0;
  ActivationShape in = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (const auto* c = std::get_if<ConvSpec>(&layers[i])) {
      n += c->kernel * c->kernel * in.channels * c->out_channels + c->out_channels;
    } else if (holds<SubSampleSpec>(layers[i])) {
      n += 2 * in.channels;
    } else if (const auto* f = std::get_if<FcSpec>(&layers[i])) {
      n += in.volume() * f->out + f->out;
    }
    in = shapes[i];
  }
  return n;
}

NetworkSpec NetworkSpec::conv_stack() const {
  NetworkSpec out{input, {}, Profile::custom};
  const Index tap = last_conv();
  out.layers.assign(layers.begin(), layers.begin() + tap + 1);
  return out;
}

NetworkSpec NetworkSpec::without_su() const {
  NetworkSpec out = *this;
  std::erase_if(out.layers, holds<SuSpec>);
  return out;
}

NetworkSpec NetworkSpec::with_su(const SuSpec& su) const {
  NetworkSpec out = without_su();
  const auto it = std::find_if(out.layers.begin(), out.layers.end(), holds<SubSampleSpec>);
  if (it == out.layers.end()) throw SpecificationError("no sub-sampling layer to place the SU layer after");
  out.layers.insert(it + 1, su);
  return out;
}

NetworkSpec NetworkSpec::toy(Index classes, Index side, Index channels) {
  NetworkSpec spec{{side, side, channels}, {}, Profile::toy};
  spec.layers = {
      ConvSpec{8, 5, 1, 2}, LrnSpec{},           SubSampleSpec{2},     ConvSpec{16, 3, 1, 1}, SubSampleSpec{2},
      ConvSpec{16, 3, 1, 1}, ConvSpec{16, 3, 1, 1}, ConvSpec{16, 3, 1, 1}, FcSpec{64, true},      FcSpec{64, true},
      FcSpec{64, true},      FcSpec{classes, false},
  };
  return spec;
}

NetworkSpec NetworkSpec::full(Index classes, Index hidden) {
  NetworkSpec spec{{224, 224, 3}, {}, Profile::full};
  spec.layers = {
      ConvSpec{96, 11, 4, 2},  LrnSpec{},
      SubSampleSpec{2},        ConvSpec{256, 5, 1, 2},
      SubSampleSpec{2},        ConvSpec{384, 3, 1, 1},
      ConvSpec{384, 3, 1, 1},  ConvSpec{256, 3, 1, 1},
      FcSpec{hidden, true},    FcSpec{hidden, true},
      FcSpec{hidden, true},    FcSpec{classes, false},
  };
  return spec;
}

}  // namespace s2ica
