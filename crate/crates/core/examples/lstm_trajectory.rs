//! Train the recurrent localizer on simulated inactive-phone routes and
//! score it against SSP on held-out routes.
//!
//! ```text
//! cargo run --release --example lstm_trajectory [routes] [epochs]
//! ```

use wifiloc::airsim::{DeviceProfile, PhoneState};
use wifiloc::eval::{localize_run, train_lstm, Engine, ErrorReport, ScenarioConfig};
use wifiloc::protocol::Algorithm;
use wifiloc::rnn::{LstmConfig, TrainConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let routes: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(40);
    let epochs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30);

    let mut engine = Engine::survey(ScenarioConfig::desk())?;
    let cfg = LstmConfig::desk(engine.env().ap_count());
    println!("LSTM {:?}, {} parameters", cfg.hidden_sizes, cfg.parameter_count());
    let tc = TrainConfig {
        epochs,
        seed: 17,
        ..Default::default()
    };
    let rep = train_lstm(&mut engine, cfg, routes, &tc)?;
    for (e, l) in rep.epoch_loss.iter().enumerate().step_by((epochs / 6).max(1)) {
        println!("epoch {e:>3}  loss {l:.5}");
    }

    // Training routes use mixed seeds, so small plain seeds are unseen.
    let (mut lstm, mut ssp) = (Vec::new(), Vec::new());
    for (i, dev) in DeviceProfile::all().iter().enumerate() {
        for seed in [i as u64, 10 + i as u64] {
            let run = engine.simulate(dev, PhoneState::InactiveScreenOn, true, seed)?;
            lstm.push(localize_run(&engine, &run, Algorithm::PmimoLstm, 1.0, true)?.report());
            ssp.push(localize_run(&engine, &run, Algorithm::Ssp, 1.0, true)?.report());
        }
    }
    println!("held-out routes: LSTM {} m, SSP {} m", ErrorReport::merge(&lstm).summary(), ErrorReport::merge(&ssp).summary());
    Ok(())
}
