#include "qsllab/presets.hpp"

#include "qsllab/error.hpp"

namespace qsllab::scenario {

namespace {

std::string dephasing(const char* kind, const std::string& physics,
                      const std::string& sweep) {
  return std::string("[scenario]\nkind = ") + kind + "\n\n[physics]\n" +
         physics + "\n[sweep]\n" + sweep;
}

std::vector<Preset> build() {
  const std::string ohmic50 =
      "frequency = 1\ncutoff = 50\nohmicity = 1\ntau_d = 1\n";
  const std::string strong = "coupling = 0.2\n";
  const std::string weak = "coupling = 0.001\n";
  const std::string t3 = "t = 0 : 3 : 31\n";
  const std::string bang = "frequency = 1\ncutoff = 20\ntau_d = 1\ncoupling = 0.2\n";
  const std::string heom =
      "frequency = 1\ncutoff = 5\ng0 = 0.1\ntau_d = 10\n";
  const std::string heom_t = "t = 0 : 10 : 21\n";

  std::vector<Preset> p;
  p.push_back({"fig1a", "QSL ratio vs t for T in {0.5, 1, 5}, strong coupling",
               dephasing("dephasing-qsl", ohmic50 + strong,
                         "temperature = [0.5, 1, 5]\n" + t3)});
  p.push_back({"fig1a-inset", "QSL ratio vs T at t = 0.3, strong coupling",
               dephasing("dephasing-qsl", ohmic50 + strong + "t = 0.3\n",
                         "temperature = 0.25 : 10 : 40\n")});
  p.push_back({"fig1b", "QSL ratio vs t for T in {0.1, 1, 5}, weak coupling",
               dephasing("dephasing-qsl", ohmic50 + weak,
                         "temperature = [0.1, 1, 5]\nt = 0 : 5 : 26\n")});
  p.push_back({"fig1b-inset", "QSL ratio vs T at t = 0.5 and t = 3, weak coupling",
               dephasing("dephasing-qsl", ohmic50 + weak,
                         "t = [0.5, 3]\ntemperature = 0 : 10 : 41\n")});
  p.push_back({"fig2a", "QSL ratio over l1 coherence vs t, strong coupling",
               dephasing("dephasing-ratio", ohmic50 + strong,
                         "temperature = [0.5, 1, 5]\nt = 0 : 1.5 : 16\n")});
  p.push_back({"fig2a-weak", "QSL ratio over l1 coherence vs t, weak coupling",
               dephasing("dephasing-ratio", ohmic50 + weak,
                         "temperature = [0.5, 1, 5]\n" + t3)});
  p.push_back({"fig2b", "relative purity and l1 coherence vs t, strong coupling",
               dephasing("dephasing-qsl", ohmic50 + strong,
                         "temperature = [0.5, 1, 5]\n" + t3)});
  p.push_back({"fig2c", "relative purity and l1 coherence vs t, weak coupling",
               dephasing("dephasing-qsl", ohmic50 + weak,
                         "temperature = [0.5, 1, 5]\n" + t3)});
  const char* fig3_t[] = {"0.1", "0.5", "1", "1.5"};
  const char fig3_id[] = {'a', 'b', 'c', 'd'};
  for (int i = 0; i < 4; ++i) {
    p.push_back({std::string("fig3") + fig3_id[i],
                 std::string("QSL ratio over a (coupling, T) grid at t = ") + fig3_t[i],
                 dephasing("dephasing-qsl",
                           ohmic50 + "t = " + fig3_t[i] + "\n",
                           "coupling = [0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2]\n"
                           "temperature = 0 : 5 : 11\n")});
  }
  const std::string sub50 = "frequency = 1\ncutoff = 50\nohmicity = 0.6\ntau_d = 1\n";
  p.push_back({"fig4a", "sub-Ohmic s = 0.6, QSL ratio over (T, t), strong coupling",
               dephasing("dephasing-qsl", sub50 + strong,
                         "temperature = [0, 0.5, 1, 2, 5]\n" + t3)});
  p.push_back({"fig4b", "sub-Ohmic s = 0.6, QSL ratio over (T, t), weak coupling",
               dephasing("dephasing-qsl", sub50 + weak,
                         "temperature = [0, 0.5, 1, 2, 5]\n" + t3)});
  p.push_back({"fig4c", "QSL ratio over (s, t) at T = 1, strong coupling",
               dephasing("dephasing-qsl", ohmic50 + strong + "temperature = 1\n",
                         "ohmicity = 0.3 : 1 : 8\nt = 0 : 3 : 16\n")});
  p.push_back({"fig4d", "QSL ratio over (s, t) at T = 1, weak coupling",
               dephasing("dephasing-qsl", ohmic50 + weak + "temperature = 1\n",
                         "ohmicity = 0.3 : 1 : 8\nt = 0 : 3 : 16\n")});
  p.push_back({"fig5", "bang-bang QSL ratio vs t for pulse intervals 0.05 to 0.005",
               dephasing("bangbang-qsl", bang + "ohmicity = 1\ntemperature = 1\n",
                         "pulse_interval = [0.05, 0.02, 0.01, 0.005]\nt = 0 : 3 : 16\n")});
  p.push_back({"fig6a", "bang-bang, s = 0.6, QSL ratio over (T, t)",
               dephasing("bangbang-qsl",
                         bang + "ohmicity = 0.6\npulse_interval = 0.05\n",
                         "temperature = [0.5, 1, 2, 5]\nt = 0 : 3 : 16\n")});
  p.push_back({"fig6b", "bang-bang, T = 1, QSL ratio over (s, t)",
               dephasing("bangbang-qsl",
                         bang + "temperature = 1\npulse_interval = 0.05\n",
                         "ohmicity = 0.3 : 1 : 8\nt = 0 : 3 : 16\n")});
  p.push_back({"fig7", "HEOM qubit-A QSL ratio over (coupling, t) at T = 5",
               dephasing("heom-qsl", heom + "temperature = 5\n",
                         "coupling = [0.005, 0.0125, 0.025, 0.05]\n" + heom_t)});
  p.push_back({"fig8a", "HEOM qubit-A QSL ratio over (T, t), weak coupling",
               dephasing("heom-qsl", heom + "coupling = 0.005\n",
                         "temperature = [2, 5, 10, 20]\n" + heom_t)});
  p.push_back({"fig8b", "HEOM qubit-A QSL ratio over (T, t), strong coupling",
               dephasing("heom-qsl", heom + "coupling = 0.05\n",
                         "temperature = [2, 5, 10, 20]\n" + heom_t)});
  p.push_back({"fig8c", "HEOM qubit-A coherence over (T, t), weak coupling",
               dephasing("heom-coherence", heom + "coupling = 0.005\n",
                         "temperature = [2, 5, 10, 20]\n" + heom_t)});
  p.push_back({"fig8d", "HEOM qubit-A coherence over (T, t), strong coupling",
               dephasing("heom-coherence", heom + "coupling = 0.05\n",
                         "temperature = [2, 5, 10, 20]\n" + heom_t)});
  p.push_back({"fig8-transverse",
               "HEOM with sigma_x coupling on qubit B: T-dependent qubit-A dynamics",
               dephasing("heom-qsl",
                         heom + "coupling = 0.05\ncoupling_operator = sigma_x_b\n",
                         "temperature = [5, 10, 20]\nt = 0 : 5 : 11\n")});
  return p;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build();
  return all;
}

const Preset& find_preset(std::string_view name) {
  for (const Preset& p : presets()) {
    if (p.name == name) return p;
  }
  throw ParameterError("unknown preset '" + std::string(name) +
                       "' (see `qsl-lab presets`)");
}

}  // namespace qsllab::scenario
