/// Formats `value` with `digits` significant digits.
///
/// Plain decimal notation is used for magnitudes in `[1e-3, 1e6)`, scientific
/// notation otherwise, so tiny probabilities stay readable.
pub fn format_sig(value: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i32;
    if (-3..6).contains(&magnitude) {
        let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
        let text = format!("{value:.decimals$}");
        // Rounding can carry into a new digit (9.999995 -> 10.00000); trim it back.
        if text.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > digits
            && decimals > 0
        {
            let decimals = decimals - 1;
            return format!("{value:.decimals$}");
        }
        text
    } else {
        format!("{:.*e}", digits - 1, value)
    }
}
