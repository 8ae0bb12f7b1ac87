use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{binary_cross_entropy, AdamState, Gradients, Mode, NetError, Network};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Share of rows (taken from the end, in input order) held out for
    /// validation and never used for updates.
    pub validation_fraction: f64,
    pub seed: u64,
    /// Stop after this many epochs without a validation-loss improvement.
    pub patience: Option<usize>,
    /// On early stop, go back to the weights with the best validation loss.
    pub restore_best: bool,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 128,
            validation_fraction: 0.2,
            seed: 42,
            patience: Some(10),
            restore_best: true,
            learning_rate: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub curves: Vec<EpochStats>,
    pub n_train: usize,
    pub n_val: usize,
    /// Epoch whose weights the network holds at the end.
    pub final_epoch: usize,
}

impl TrainReport {
    /// `epoch,train_loss,val_loss,train_acc,val_acc`; missing validation
    /// values are empty fields.
    pub fn write_curves_csv<W: std::io::Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "train_loss", "val_loss", "train_acc", "val_acc"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.curves {
            w.write_record([
                e.epoch.to_string(),
                e.train_loss.to_string(),
                opt(e.val_loss),
                e.train_acc.to_string(),
                opt(e.val_acc),
            ])?;
        }
        w.flush()
    }
}

/// Mean cross-entropy (without the L2 term) and accuracy at 0.5.
fn evaluate(net: &Network, x: &[Vec<f64>], y: &[u8]) -> Result<(f64, f64), NetError> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (row, &label) in x.iter().zip(y) {
        let p = net.predict(row)?;
        loss += binary_cross_entropy(p, f64::from(label), 0.0);
        correct += usize::from((p >= 0.5) == (label == 1));
    }
    let n = x.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

pub fn train(net: &mut Network, x: &[Vec<f64>], y: &[u8], cfg: &TrainConfig) -> Result<TrainReport, NetError> {
    if !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(NetError::InvalidConfig("validation fraction must lie in [0, 1)".into()));
    }
    if cfg.batch_size == 0 {
        return Err(NetError::InvalidConfig("batch size must be positive".into()));
    }
    assert_eq!(x.len(), y.len(), "feature and label counts differ");
    if let Some(row) = x.iter().find(|r| r.len() != net.input_dim()) {
        return Err(NetError::DimensionMismatch {
            expected: net.input_dim(),
            found: row.len(),
        });
    }
    let n_val = (x.len() as f64 * cfg.validation_fraction).round() as usize;
    let n_train = x.len() - n_val;
    if n_train == 0 {
        return Err(NetError::EmptyTraining);
    }
    let (train_x, val_x) = x.split_at(n_train);
    let (train_y, val_y) = y.split_at(n_train);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(net.param_count(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut curves = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut final_epoch = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut sum = vec![0.0; net.param_count()];
            for &i in batch {
                let cache = net.forward(&train_x[i], Mode::Train(&mut rng))?;
                let g = net.backward(&cache, f64::from(train_y[i]));
                sum.iter_mut().zip(&g.0).for_each(|(s, v)| *s += v);
            }
            let scale = 1.0 / batch.len() as f64;
            sum.iter_mut().for_each(|s| *s *= scale);
            adam.step(net, &Gradients(sum));
        }
        final_epoch = epoch;

        let (train_loss, train_acc) = evaluate(net, train_x, train_y)?;
        let (val_loss, val_acc) = if n_val > 0 {
            let (l, a) = evaluate(net, val_x, val_y)?;
            (Some(l), Some(a))
        } else {
            (None, None)
        };
        curves.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            train_acc,
            val_acc,
        });

        if let (Some(patience), Some(vl)) = (cfg.patience, val_loss) {
            match &best {
                Some((best_loss, _, _)) if vl >= *best_loss => {}
                _ => best = Some((vl, epoch, net.params())),
            }
            let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
            if epoch - best_epoch >= patience {
                break;
            }
        }
    }
    if cfg.restore_best {
        if let Some((_, epoch, params)) = best {
            if epoch != final_epoch {
                net.set_params(&params);
                final_epoch = epoch;
            }
        }
    }
    Ok(TrainReport {
        curves,
        n_train,
        n_val,
        final_epoch,
    })
}

/// [`train`] on a standardised, NA-free feature matrix.
pub fn train_matrix(net: &mut Network, m: &FeatureMatrix, cfg: &TrainConfig) -> Result<TrainReport, NetError> {
    let x = m
        .dense()
        .map_err(|e| NetError::InvalidConfig(format!("training matrix: {e}")))?;
    train(net, &x, &m.labels(), cfg)
}

/// Inference-mode probabilities for every row.
pub fn predict_proba(net: &Network, x: &[Vec<f64>]) -> Result<Vec<f64>, NetError> {
    x.iter().map(|row| net.predict(row)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NetConfig;
    use rand::Rng;

    fn separable(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        while x.len() < n {
            let a: f64 = rng.random_range(-2.0..2.0);
            let b: f64 = rng.random_range(-2.0..2.0);
            let margin = a + 0.5 * b;
            if margin.abs() < 0.2 {
                continue;
            }
            x.push(vec![a, b]);
            y.push(u8::from(margin > 0.0));
        }
        (x, y)
    }

    #[test]
    fn learns_separable_toy_set() {
        let (x, y) = separable(200, 1);
        let mut net = Network::new(2, &NetConfig::simple(8, 0.0, 0.0), 2).unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 16,
            validation_fraction: 0.0,
            patience: None,
            learning_rate: 1e-2,
            ..Default::default()
        };
        let report = train(&mut net, &x, &y, &cfg).unwrap();
        assert_eq!(report.curves.last().unwrap().train_acc, 1.0);
    }

    #[test]
    fn validation_rows_are_held_out() {
        let (x, y) = separable(1000, 3);
        let mut net = Network::new(2, &NetConfig::default(), 4).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            ..Default::default()
        };
        let report = train(&mut net, &x, &y, &cfg).unwrap();
        assert_eq!((report.n_train, report.n_val), (800, 200));

        // Changing validation rows does not change the trained weights
        // when early stopping is off.
        let cfg = TrainConfig {
            epochs: 3,
            patience: None,
            ..Default::default()
        };
        let mut a = Network::new(2, &NetConfig::default(), 4).unwrap();
        let mut b = a.clone();
        train(&mut a, &x, &y, &cfg).unwrap();
        let mut y2 = y.clone();
        y2[900..].iter_mut().for_each(|v| *v = 1 - *v);
        train(&mut b, &x, &y2, &cfg).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn same_seed_same_weights() {
        let (x, y) = separable(300, 5);
        let cfg = TrainConfig {
            epochs: 5,
            ..Default::default()
        };
        let run = || {
            let mut net = Network::new(2, &NetConfig::default(), 6).unwrap();
            train(&mut net, &x, &y, &cfg).unwrap();
            net.params()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_training_partition() {
        let mut net = Network::new(1, &NetConfig::default(), 0).unwrap();
        assert!(matches!(
            train(&mut net, &[], &[], &TrainConfig::default()),
            Err(NetError::EmptyTraining)
        ));
    }

    #[test]
    fn full_batch_loss_is_non_increasing() {
        let (x, y) = separable(100, 7);
        let mut net = Network::new(2, &NetConfig::linear(), 8).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 100,
            validation_fraction: 0.0,
            patience: None,
            learning_rate: 1e-3,
            ..Default::default()
        };
        let report = train(&mut net, &x, &y, &cfg).unwrap();
        for w in report.curves.windows(2) {
            assert!(w[1].train_loss <= w[0].train_loss + 1e-6);
        }
    }

    #[test]
    fn predictions_are_permutation_equivariant() {
        let (x, _) = separable(50, 9);
        let net = Network::new(2, &NetConfig::default(), 10).unwrap();
        let p = predict_proba(&net, &x).unwrap();
        let mut rev = x.clone();
        rev.reverse();
        let mut q = predict_proba(&net, &rev).unwrap();
        q.reverse();
        assert_eq!(p, q);
        assert_eq!(p[3], net.forward(&x[3], Mode::Infer).unwrap().output);
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn curves_csv() {
        let report = TrainReport {
            curves: vec![EpochStats {
                epoch: 1,
                train_loss: 0.5,
                val_loss: None,
                train_acc: 0.75,
                val_acc: None,
            }],
            n_train: 4,
            n_val: 0,
            final_epoch: 1,
        };
        let mut buf = Vec::new();
        report.write_curves_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,train_loss,val_loss,train_acc,val_acc\n1,0.5,,0.75,\n"
        );
    }
}
