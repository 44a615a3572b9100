//! Sweep a LEO downlink over distance and receive aperture.
//!
//! ```bash
//! cargo run --example link_budget
//! ```

use qkdplan::decoy_rate::DecoyProtocolParams;
use qkdplan::link_budget::{far_field_check, summarize, transmittance, LinkPreset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let protocol = DecoyProtocolParams::default();
    let base = LinkPreset::LeoGs.params();
    println!("far field starts at {:.1} km", base.far_field_distance() / 1e3);

    println!("\n{:>10} {:>10} {:>12} {:>10}", "km", "loss dB", "delta", "R (bps)");
    for km in [500.0, 800.0, 1000.0, 1500.0, 2000.0] {
        let link = base.with_distance(km * 1e3);
        let s = summarize(&link, &protocol)?;
        println!("{km:>10.0} {:>10.2} {:>12.3e} {:>10.1}", s.total_db, s.transmittance, s.key_rate_bps);
    }

    println!("\nreceive aperture at 1000 km:");
    for d in [0.1, 0.2, 0.4, 0.8] {
        let mut link = base.with_distance(1e6);
        link.rx_aperture = d;
        println!("  D_R = {d:.1} m -> transmittance {:.3e}", transmittance(&link)?);
    }

    let close = base.with_distance(10.0);
    println!("\n10 m is far field: {}", far_field_check(&close));
    if let Err(e) = transmittance(&close) {
        println!("  {e}");
    }
    Ok(())
}
