//! Fingerprint database directory.
//!
//! `env.toml` holds the geometry. Each RP has `rp_<id>.csv`:
//!
//! ```text
//! 12,3.50000000e0,4.50000000e0          rp_id,x,y
//! 0,samsung_s6,1.25000000e-1,-5.10000000e1   ap_id,device,timestamp,rssi
//! #csi 0 0 2.00000000e-1               ap_id scan_index [timestamp]
//! 0,1.00000000e0,-3.14159265e0          51 rows subcarrier,amplitude,phase
//! ```
//!
//! Floats carry nine significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::csi::{CsiScan, SUBCARRIERS};
use crate::error::{Error, Result};
use crate::fingerprint::{Environment, FingerprintDatabase, FingerprintRecord, RssiSample};
use crate::textio::{parse_f64, sig9};

pub const ENV_FILE: &str = "env.toml";

pub fn record_file_name(rp: usize) -> String {
    format!("rp_{rp:05}.csv")
}

pub fn write_record(rec: &FingerprintRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{},{},{}", rec.rp_id, sig9(rec.location.x), sig9(rec.location.y));
    for (ap, devs) in &rec.rssi {
        for (dev, samples) in devs {
            for s in samples {
                let _ = writeln!(out, "{ap},{dev},{},{}", sig9(s.t), sig9(s.rssi));
            }
        }
    }
    for (ap, scans) in &rec.csi {
        for (i, scan) in scans.iter().enumerate() {
            let _ = writeln!(out, "#csi {ap} {i} {}", sig9(scan.timestamp));
            for k in 0..SUBCARRIERS {
                let _ = writeln!(out, "{k},{},{}", sig9(scan.amplitudes[k]), sig9(scan.phases[k]));
            }
        }
    }
    out
}

pub fn read_record(text: &str, origin: &Path) -> Result<FingerprintRecord> {
    let err = |n: usize, m: String| Error::parse(origin, n, m);
    let num = |n: usize, f: &str| parse_f64(f).ok_or_else(|| err(n, format!("bad number `{f}`")));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (n, head) = lines.next().ok_or_else(|| err(1, "empty record file".into()))?;
    let h: Vec<&str> = head.split(',').collect();
    if h.len() != 3 {
        return Err(err(n, format!("expected `rp_id,x,y`, found `{head}`")));
    }
    let rp_id: usize = h[0].parse().map_err(|_| err(n, format!("bad rp_id `{}`", h[0])))?;
    let mut rec = FingerprintRecord::new(rp_id, crate::fingerprint::Location::new(num(n, h[1])?, num(n, h[2])?));

    let mut csi: BTreeMap<usize, Vec<CsiScan>> = BTreeMap::new();
    let mut lines = lines.peekable();
    while let Some((n, line)) = lines.next() {
        if let Some(rest) = line.strip_prefix("#csi") {
            let tok: Vec<&str> = rest.split_whitespace().collect();
            if !(2..=3).contains(&tok.len()) {
                return Err(err(n, format!("expected `#csi ap_id scan_index [timestamp]`, found `{line}`")));
            }
            let ap: usize = tok[0].parse().map_err(|_| err(n, format!("bad ap_id `{}`", tok[0])))?;
            let idx: usize = tok[1].parse().map_err(|_| err(n, format!("bad scan_index `{}`", tok[1])))?;
            let ts = match tok.get(2) {
                Some(t) => num(n, t)?,
                None => idx as f64,
            };
            let mut amp = [0.0; SUBCARRIERS];
            let mut ph = [0.0; SUBCARRIERS];
            for k in 0..SUBCARRIERS {
                let (m, row) = lines
                    .next()
                    .ok_or_else(|| err(n, format!("CSI block ends after {k} of {SUBCARRIERS} rows")))?;
                let f: Vec<&str> = row.split(',').collect();
                if f.len() != 3 || f[0].parse::<usize>() != Ok(k) {
                    return Err(err(m, format!("expected `{k},amplitude,phase`, found `{row}`")));
                }
                amp[k] = num(m, f[1])?;
                ph[k] = num(m, f[2])?;
            }
            let scan = CsiScan::new(ap, ts, amp, ph).map_err(|e| err(n, e.to_string()))?;
            let list = csi.entry(ap).or_default();
            if idx != list.len() {
                return Err(err(n, format!("scan_index {idx} out of sequence (expected {})", list.len())));
            }
            list.push(scan);
        } else {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(err(n, format!("expected `ap_id,device,timestamp,rssi`, found `{line}`")));
            }
            let ap: usize = f[0].parse().map_err(|_| err(n, format!("bad ap_id `{}`", f[0])))?;
            let sample = RssiSample {
                t: num(n, f[2])?,
                rssi: num(n, f[3])?,
            };
            rec.rssi
                .entry(ap)
                .or_default()
                .entry(f[1].to_string())
                .or_default()
                .push(sample);
        }
    }
    rec.csi = csi;
    Ok(rec)
}

pub fn save_database(db: &FingerprintDatabase, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let env = toml::to_string(db.env()).map_err(|e| Error::Config(format!("cannot encode environment: {e}")))?;
    let p = dir.join(ENV_FILE);
    std::fs::write(&p, env).map_err(|e| Error::io(&p, e))?;
    for rec in db.records() {
        if rec.rssi.values().flat_map(|d| d.keys()).any(|d| d.contains([',', '\n'])) {
            return Err(Error::Config(format!("RP {}: device names may not contain commas", rec.rp_id)));
        }
        let p = dir.join(record_file_name(rec.rp_id));
        std::fs::write(&p, write_record(rec)).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

pub fn load_database(dir: &Path) -> Result<FingerprintDatabase> {
    let p = dir.join(ENV_FILE);
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let env: Environment = toml::from_str(&text).map_err(|e| Error::parse(&p, 0, e.to_string()))?;
    env.validate()?;
    let mut records = BTreeMap::new();
    for rp in &env.rps {
        let p = dir.join(record_file_name(rp.id));
        if !p.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let rec = read_record(&text, &p)?;
        if rec.rp_id != rp.id {
            return Err(Error::parse(&p, 1, format!("file holds RP {}, expected {}", rec.rp_id, rp.id)));
        }
        if let Some(&ap) = rec.rssi.keys().chain(rec.csi.keys()).find(|&&a| a >= env.ap_count()) {
            return Err(Error::UnknownAp(ap));
        }
        records.insert(rp.id, rec);
    }
    if records.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    Ok(FingerprintDatabase::from_parts(env, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip_is_stable() {
        let mut rec = FingerprintRecord::new(3, crate::fingerprint::Location::new(1.5, 2.5));
        rec.rssi
            .entry(0)
            .or_default()
            .insert("nexus5".into(), vec![RssiSample { t: 0.1, rssi: -61.234567891 }]);
        let amp: [f64; SUBCARRIERS] = std::array::from_fn(|k| 1.0 + k as f64 / 7.0);
        let ph: [f64; SUBCARRIERS] = std::array::from_fn(|k| (k as f64 * 0.3).sin());
        rec.csi.insert(1, vec![CsiScan::new(1, 0.5, amp, ph).unwrap()]);
        let text = write_record(&rec);
        let back = read_record(&text, Path::new("mem")).unwrap();
        assert_eq!(write_record(&back), text);
        assert_eq!(back.rssi[&0]["nexus5"][0].rssi, -61.2345679);
    }

    #[test]
    fn short_csi_block_is_an_error() {
        let text = "0,0,0\n#csi 0 0\n0,1,0\n";
        let e = read_record(text, Path::new("mem")).unwrap_err();
        assert!(e.to_string().contains("CSI block ends"), "{e}");
    }
}
