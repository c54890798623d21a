#ifndef IPSLAB_CONFIGURATION_HPP
#define IPSLAB_CONFIGURATION_HPP

#include <map>

#include "ipslab/construction.hpp"

namespace ipslab {

// Site states: -1 susceptible never infected, 0 susceptible previously
// infected, 1 infected. A configuration is an explicit finite window plus
// piecewise-constant defaults on each side.
struct Configuration {
    std::map<Site, int> window;
    int left_default = -1;
    int right_default = -1;

    int at(Site x) const {
        if (!window.empty()) {
            if (x < window.begin()->first) return left_default;
            if (x > window.rbegin()->first) return right_default;
            auto it = window.find(x);
            return it == window.end() ? -1 : it->second;
        }
        return x <= 0 ? left_default : right_default;
    }

    bool left_infinite() const { return left_default != -1; }
    bool right_infinite() const { return right_default != -1; }

    // Origin infected, everything else never infected.
    static Configuration standard() { return single(0); }

    static Configuration single(Site k) {
        Configuration c;
        c.window[k] = 1;
        return c;
    }

    // 1 on (-inf, y], -1 on [y+1, inf).
    static Configuration half_line(Site y) {
        Configuration c;
        c.window[y] = 1;
        c.left_default = 1;
        return c;
    }

    static Configuration all_ones() {
        Configuration c;
        c.left_default = 1;
        c.right_default = 1;
        return c;
    }

    static Configuration interval(Site a, Site b, int value = 1) {
        Configuration c;
        for (Site x = a; x <= b; ++x) c.window[x] = value;
        return c;
    }
};

}  // namespace ipslab

#endif
