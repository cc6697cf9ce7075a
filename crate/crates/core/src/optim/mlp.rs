use crate::error::{CrfError, Result};
use crate::models::{Hyper, KernelModel, ModelKind, Obs};
use crate::optim::lm::{lm_step, LmState};
use crate::optim::{record, unit_range, FittedModel, TrainConfig};
use crate::scalar::Scalar;

/// Trains a one-hidden-layer sigmoid network with batch Levenberg-Marquardt.
///
/// Each epoch is one LM step over the whole training set, with the Jacobian
/// obtained by backpropagating through the hidden layer. Weights start
/// uniformly in `config.init_weight_range` unless `init` supplies them (warm
/// start). Train and validation MSE are recorded after every epoch.
pub fn train_mlp<T: Scalar>(
    train: &[Obs<T>],
    val: &[Obs<T>],
    units: usize,
    config: &TrainConfig,
    init: Option<&[T]>,
) -> Result<FittedModel<T>> {
    config.validate()?;
    if units == 0 {
        return Err(CrfError::InvalidConfig("MLP needs at least one hidden neuron".into()));
    }
    if train.is_empty() {
        return Err(CrfError::EmptyData);
    }
    let n = ModelKind::Mlp.param_len(units);
    let params = match init {
        Some(p) if p.len() == n => p.to_vec(),
        Some(p) => {
            return Err(CrfError::ParamLength {
                kind: "Mlp",
                expected: n,
                got: p.len(),
            })
        }
        None => config.draw_weights(n),
    };
    let mut model = KernelModel::new(ModelKind::Mlp, Hyper::units(units), params, unit_range())?;
    let mut state = LmState::new(&model, train, T::lit(config.init_step))?;
    let mut fitted = FittedModel::new(model.clone());
    let tol = T::lit(config.tolerance);
    for epoch in 1..=config.max_epochs {
        state = lm_step(&model, train, state)?;
        model.params.clone_from(&state.params);
        fitted.trace.push(record(epoch, &model, train, val)?);
        if state.cost() * T::lit(2.0) / T::from_count(train.len()) <= tol {
            break;
        }
    }
    fitted.model = model;
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::mse;

    fn teacher() -> KernelModel<f64> {
        KernelModel::new(
            ModelKind::Mlp,
            Hyper::units(2),
            vec![9.0, -2.0, 2.0, 7.0, -5.5, -1.5, 1.0],
            (0.0, 1.0),
        )
        .unwrap()
    }

    fn samples(m: &KernelModel<f64>, n: usize) -> Vec<Obs<f64>> {
        (0..n)
            .map(|i| {
                let x = i as f64 / (n - 1) as f64;
                Obs::new(x, m.eval(x).unwrap())
            })
            .collect()
    }

    #[test]
    fn recovers_two_neuron_teacher() {
        let data = samples(&teacher(), 40);
        let best = (0..5u64)
            .map(|seed| {
                let cfg = TrainConfig { max_epochs: 400, seed, ..Default::default() };
                let fit = train_mlp(&data, &[], 2, &cfg, None).unwrap();
                mse(&fit.model, &data).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "best train mse {best}");
    }

    #[test]
    fn rejects_zero_epochs_and_units() {
        let data = samples(&teacher(), 5);
        let cfg = TrainConfig { max_epochs: 0, ..Default::default() };
        assert!(matches!(train_mlp(&data, &[], 2, &cfg, None), Err(CrfError::InvalidConfig(_))));
        assert!(train_mlp(&data, &[], 0, &TrainConfig::default(), None).is_err());
    }

    #[test]
    fn deterministic_and_traced() {
        let data = samples(&teacher(), 12);
        let cfg = TrainConfig { max_epochs: 4, seed: 9, ..Default::default() };
        let a = train_mlp(&data, &data[..3], 3, &cfg, None).unwrap();
        let b = train_mlp(&data, &data[..3], 3, &cfg, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace.len(), 4);
        assert!(a.trace.iter().all(|r| r.val_mse.is_some()));
        assert!(a.trace.windows(2).all(|w| w[1].train_mse <= w[0].train_mse));
    }

    #[test]
    fn warm_start_is_used() {
        let data = samples(&teacher(), 12);
        let cfg = TrainConfig { max_epochs: 1, ..Default::default() };
        let fit = train_mlp(&data, &[], 2, &cfg, Some(&teacher().params)).unwrap();
        assert_eq!(fit.model.params, teacher().params);
    }
}
