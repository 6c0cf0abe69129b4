//! Static SVG heatmap of a beta grid with significance stars: diverging
//! color scale centered at zero, gray zero diagonal, recovered cell dashed.

const CELL_W: f64 = 96.0;
const CELL_H: f64 = 64.0;
const LEFT: f64 = 110.0;
const TOP: f64 = 70.0;

fn color_for(value: f64, max_abs: f64) -> String {
    if max_abs <= 0.0 {
        return "rgb(255,255,255)".to_string();
    }
    let t = (value.abs() / max_abs).clamp(0.0, 1.0);
    let lerp = |from: f64, to: f64| (from + t * (to - from)).round() as u8;
    if value >= 0.0 {
        // white -> red
        format!("rgb({},{},{})", lerp(255.0, 178.0), lerp(255.0, 24.0), lerp(255.0, 43.0))
    } else {
        // white -> blue
        format!("rgb({},{},{})", lerp(255.0, 33.0), lerp(255.0, 102.0), lerp(255.0, 172.0))
    }
}

fn text_color(value: f64, max_abs: f64) -> &'static str {
    if max_abs > 0.0 && value.abs() / max_abs > 0.6 {
        "#ffffff"
    } else {
        "#111111"
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render the heatmap. `values[i][j]` is the displayed effect of main group
/// i against rival group j; `stars[i][j]` its annotation ("" on diagonals).
pub fn render(
    title: &str,
    labels: &[String],
    values: &[Vec<f64>],
    stars: &[Vec<String>],
) -> String {
    let k = labels.len();
    let width = LEFT + k as f64 * CELL_W + 30.0;
    let height = TOP + k as f64 * CELL_H + 70.0;
    let max_abs = values
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(move |(j, _)| i != *j)
                .map(|(_, v)| v.abs())
        })
        .fold(0.0f64, f64::max);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.0}\" y=\"30\" font-family=\"sans-serif\" font-size=\"18\" text-anchor=\"middle\">{}</text>\n",
        LEFT + k as f64 * CELL_W / 2.0,
        esc(title)
    ));

    for (j, label) in labels.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            LEFT + (j as f64 + 0.5) * CELL_W,
            TOP - 12.0,
            esc(label)
        ));
    }
    for (i, label) in labels.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"end\">{}</text>\n",
            LEFT - 10.0,
            TOP + (i as f64 + 0.6) * CELL_H,
            esc(label)
        ));
    }

    for i in 0..k {
        for j in 0..k {
            let x = LEFT + j as f64 * CELL_W;
            let y = TOP + i as f64 * CELL_H;
            let diagonal = i == j;
            let omitted = i == k - 1 && j == k - 1;
            let fill = if diagonal {
                "rgb(235,235,235)".to_string()
            } else {
                color_for(values[i][j], max_abs)
            };
            let stroke = if omitted {
                " stroke=\"#333333\" stroke-width=\"2\" stroke-dasharray=\"6,3\""
            } else {
                " stroke=\"#cccccc\" stroke-width=\"1\""
            };
            svg.push_str(&format!(
                "<rect x=\"{x:.0}\" y=\"{y:.0}\" width=\"{CELL_W:.0}\" height=\"{CELL_H:.0}\" fill=\"{fill}\"{stroke}/>\n"
            ));
            let label = if diagonal && !omitted {
                "0".to_string()
            } else if omitted {
                format!("{:.2}{}\u{2020}", values[i][j], stars[i][j])
            } else {
                format!("{:.2}{}", values[i][j], stars[i][j])
            };
            let color = if diagonal { "#555555" } else { text_color(values[i][j], max_abs) };
            svg.push_str(&format!(
                "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" fill=\"{color}\">{}</text>\n",
                x + CELL_W / 2.0,
                y + CELL_H / 2.0 + 5.0,
                esc(&label)
            ));
        }
    }

    svg.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333333\">*** p&lt;0.001&#160;&#160;** p&lt;0.01&#160;&#160;* p&lt;0.05&#160;&#160;ns otherwise&#160;&#160;&#8224; recovered omitted cell&#160;&#160;red positive / blue negative</text>\n",
        LEFT,
        TOP + k as f64 * CELL_H + 34.0
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_marked_cells_and_scale() {
        let labels: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let values = vec![vec![0.0, 0.4], vec![-0.4, 0.0]];
        let stars = vec![
            vec![String::new(), "***".to_string()],
            vec!["*".to_string(), String::new()],
        ];
        let svg = render("demo", &labels, &values, &stars);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("0.40***"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("rgb(178,24,43)")); // saturated positive
        assert!(svg.contains("rgb(33,102,172)")); // saturated negative
        assert!(svg.contains("\u{2020}"));
    }
}
