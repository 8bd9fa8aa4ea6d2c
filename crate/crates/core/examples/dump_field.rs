//! Tabulate a velocity field and its transform as CSV on stdout.

use digraf::experiments::{dump_field, field_csv};

fn main() -> digraf::Result<()> {
    let theta = [0.6, -0.9, 0.4, 0.2, -0.3, 0.8, -0.1];
    let rows = dump_field(&theta, 5.0, 8, 21)?;
    print!("{}", field_csv(&rows));
    Ok(())
}
