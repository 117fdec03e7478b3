use mdclean::Instance;

/// Left-aligned columns separated by two spaces.
pub fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let padded: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&mut header.iter().copied());
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
    }
    out
}

/// One table per relation, headed by its name.
pub fn instance(d: &Instance) -> String {
    let mut out = String::new();
    for (r, rel) in d.schema().relations().iter().enumerate() {
        let mut header = vec!["tid"];
        header.extend(rel.attributes.iter().map(|a| a.name.as_str()));
        let rows: Vec<Vec<String>> = d
            .tuples(r)
            .iter()
            .map(|t| std::iter::once(t.tid.to_string()).chain(t.values.iter().map(ToString::to_string)).collect())
            .collect();
        out.push_str(&format!("{}\n", rel.name));
        out.push_str(&render(&header, &rows));
    }
    out
}
