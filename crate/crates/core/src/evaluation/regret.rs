use crate::instance::Instance;
use crate::pipeline::Prediction;

/// `max_n max_a ⟨θ*, a − â(A_n)⟩` under the instance's hidden parameter.
pub fn simple_regret(instance: &Instance, prediction: &Prediction) -> f64 {
    let theta = &instance.theta_star;
    instance
        .action_sets
        .iter()
        .zip(&prediction.choices)
        .map(|(set, &chosen)| {
            let got = theta.dot(&set.arms[chosen]);
            set.arms
                .iter()
                .map(|a| theta.dot(a) - got)
                .fold(0.0_f64, f64::max)
        })
        .fold(0.0_f64, f64::max)
}

/// Contexts where the prediction is strictly suboptimal.
pub fn mistakes(instance: &Instance, prediction: &Prediction) -> Vec<usize> {
    let theta = &instance.theta_star;
    instance
        .action_sets
        .iter()
        .zip(&prediction.choices)
        .enumerate()
        .filter(|(_, (set, &chosen))| {
            let got = theta.dot(&set.arms[chosen]);
            set.arms.iter().any(|a| theta.dot(a) > got)
        })
        .map(|(n, _)| n)
        .collect()
}
