#pragma once

#include "maxt/models.hpp"

namespace maxt {

// Dose-finding study with two primary endpoints (percentage change of
// triglyceride and of cholesterol vs. baseline): placebo plus 5, 20 and
// 80 mg, 55 subjects. Group keys are the dose labels.
inline const Dataset& dose_finding_data() {
  static const Dataset data = [] {
    const std::vector<std::string> doses = {"C", "5", "20", "80"};
    const std::vector<int> sizes = {14, 13, 16, 12};
    const double y1[] = {
        // placebo
        -1.8625535108138624, 29.34721445954974, -6.3137678199371745,
        19.216991496698075, 12.722266036754805, 20.212583500058351,
        47.051168090719933, 29.513349935229165, 41.257325613773325,
        40.311674165141952, 10.046388081418321, -2.4302074316664015,
        -65.455311923084153, 4.5832349984574563,
        // 5 mg
        31.595255379770506, 30.657963621804562, 0.37003117275409281,
        24.931903758358956, -5.1985499511041766, -12.866678239093069,
        43.345852071382282, -30.019570550674487, 48.327903190301356,
        29.475745367759952, 42.752922177181759, 10.865586982572303,
        3.4014910331185852,
        // 20 mg
        -27.935908531021326, 56.258392730398057, 71.745137545619841,
        4.0627934257263867, 49.231849215308202, 77.910315891517342,
        67.957178491018084, 38.508391021819591, 7.5764451574917118,
        25.445762179701127, 34.676345429633706, 46.469474749409066,
        31.234807114436368, 34.110312373549867, 14.910507538569316,
        71.265170377673641,
        // 80 mg
        81.850999642168176, 60.967424204246818, 42.627748159404597,
        100.92427663976426, 29.08846322726664, 50.841679855994066,
        30.542354253178686, 70.02927830323128, 38.395066333967335,
        5.9093304025316229, -13.78436594698357, 70.033736413459621};
    const double y2[] = {
        // placebo
        -6.777903157821477, 2.0648837823842805, -10.462934365017302,
        14.464374322230817, -2.8380038403019383, 5.8629746208945486,
        3.9939864488029451, 11.949473688213379, 9.9168914824474044,
        15.3395483910324, -4.4397321627653135, -5.6984193139782686,
        -27.91928089342569, 3.3323913097447293,
        // 5 mg
        25.638593326483246, 27.873863464197768, 2.425097221381467,
        8.1926929465386973, 0.36143222132271902, -7.3254258964661609,
        38.054568297829327, -0.58317649974408781, 28.139010340561498,
        15.031853161767637, 26.786147976118691, 20.311123560755199,
        10.281829889850595,
        // 20 mg
        10.568567686223858, 42.488334296378078, 56.861102045669298,
        11.562887857471811, 39.913115453262265, 47.929874443514159,
        41.963539317444429, 32.314351990703244, 13.881355717862984,
        23.994996899563738, 34.886671412320652, 39.05634401238963,
        39.718487067123007, 27.372318355449433, 28.629904850643754,
        49.45732631086954,
        // 80 mg
        55.666669246328759, 52.288259549103216, 29.69764205753204,
        70.926629561470435, 25.769983873247657, 42.426852127674252,
        29.209993771785896, 63.247320528419898, 52.878939449964633,
        30.626651541811189, 13.990906423494813, 45.788680225436714};

    std::vector<std::string> labels;
    for (std::size_t g = 0; g < doses.size(); ++g)
      for (int i = 0; i < sizes[g]; ++i) labels.push_back(doses[g]);
    const int n = static_cast<int>(labels.size());
    Eigen::MatrixXd responses(n, 2);
    for (int i = 0; i < n; ++i) {
      responses(i, 0) = y1[i];
      responses(i, 1) = y2[i];
    }
    return Dataset::assemble(labels, std::move(responses), {"EP1", "EP2"}, std::string("C"));
  }();
  return data;
}

}  // namespace maxt
