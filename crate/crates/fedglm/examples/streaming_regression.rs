//! Feed observations into a regression one row at a time.
//!
//! The stream keeps only a small triangular factor, never the rows
//! themselves, yet fits exactly like a batch solve over everything seen.
//!
//! Run with: cargo run --example streaming_regression

use fedglm::lm::StreamState;

fn main() -> fedglm::Result<()> {
    // y = 0.5 + 2x with a touch of noise, arriving row by row
    let observations = [
        (0.0, 0.61),
        (1.0, 2.48),
        (2.0, 4.42),
        (3.0, 6.63),
        (4.0, 8.39),
        (5.0, 10.57),
        (6.0, 12.44),
        (7.0, 14.58),
    ];

    // two columns: intercept and x
    let mut stream = StreamState::new(2)?;
    for (i, &(x, y)) in observations.iter().enumerate() {
        stream = stream.update(&[1.0, x], y)?;
        if stream.n_seen() > 2 {
            let fit = stream.fit()?;
            println!(
                "after {} rows: intercept {:.4}, slope {:.4}, rss {:.4}",
                i + 1,
                fit.beta[0],
                fit.beta[1],
                fit.rss
            );
        }
    }

    let fit = stream.fit()?;
    let se = fit.std_errors.expect("n > p");
    println!(
        "\nfinal: y = {:.4} + {:.4}x  (std errors {:.4}, {:.4})",
        fit.beta[0], fit.beta[1], se[0], se[1]
    );
    println!(
        "state kept just {} numbers, not {} rows",
        stream.factor().packed().len(),
        stream.n_seen()
    );
    Ok(())
}
