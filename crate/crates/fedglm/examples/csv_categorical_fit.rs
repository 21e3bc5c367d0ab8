//! Fit a model on a CSV file with a categorical predictor.
//!
//! Categorical columns expand into indicator columns named `col.level`,
//! with the first level as the reference. Schemas can be inferred from the
//! file or pinned in JSON to fix the level order.
//!
//! Run with: cargo run --example csv_categorical_fit

use std::io::Write;

use fedglm::ingest::{build_design, infer_schema, parse_csv};
use fedglm::lm::fit_lm;

fn main() -> fedglm::Result<()> {
    let csv = "\
price,weight,grade
105,1.0,low
131,1.5,low
152,2.0,low
170,1.0,mid
196,1.5,mid
211,2.0,mid
248,1.0,high
271,1.5,high
294,2.0,high
118,1.2,low
183,1.2,mid
257,1.2,high
";
    let dir = std::env::temp_dir();
    let path = dir.join("fedglm_example_goods.csv");
    std::fs::File::create(&path)?.write_all(csv.as_bytes())?;

    let schema = infer_schema(&path, "price", &["weight".into(), "grade".into()])?;
    println!("inferred schema: {:?}\n", schema.columns);

    let table = parse_csv(&path, &schema)?;
    let design = build_design(&table, &schema, true)?;
    let fit = fit_lm(&design.x, &design.y)?;
    let se = fit.std_errors.expect("n > p");

    println!("{:<14} {:>12} {:>12}", "coefficient", "estimate", "std.error");
    for (j, name) in design.names.iter().enumerate() {
        println!("{:<14} {:>12.4} {:>12.4}", name, fit.beta[j], se[j]);
    }
    println!("\nreference level for grade is the first seen ('low');");
    println!("grade.mid and grade.high are offsets against it.");
    std::fs::remove_file(&path).ok();
    Ok(())
}
