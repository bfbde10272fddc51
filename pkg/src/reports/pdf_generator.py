"""
PDF Report Generation Module
Handles creation of study summary PDF reports
"""
import os
import time

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4, landscape
from reportlab.lib.styles import getSampleStyleSheet
from reportlab.lib.units import inch
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from config.defaults import OUTPUT_DIRECTORY
from utils.metrics import analyze_convergence, compute_study_metrics

TABLE_STYLE = TableStyle([
    ('BACKGROUND', (0, 0), (-1, 0), colors.Color(0.1725, 0.2392, 0.3137)),
    ('TEXTCOLOR', (0, 0), (-1, 0), colors.whitesmoke),
    ('ALIGN', (0, 0), (-1, -1), "RIGHT"),
    ('ALIGN', (0, 0), (1, -1), "LEFT"),
    ('FONTNAME', (0, 0), (-1, 0), "Helvetica-Bold"),
    ('FONTSIZE', (0, 0), (-1, 0), 9),
    ('BOTTOMPADDING', (0, 0), (-1, 0), 10),
    ('BACKGROUND', (0, 1), (-1, -1), colors.Color(0.9255, 0.9412, 0.9451)),
    ('FONTNAME', (0, 1), (-1, -1), "Helvetica"),
    ('FONTSIZE', (0, 1), (-1, -1), 8),
    ('GRID', (0, 0), (-1, -1), 1, colors.Color(0.7412, 0.7647, 0.7804)),
    ('LEFTPADDING', (0, 0), (-1, -1), 5),
    ('RIGHTPADDING', (0, 0), (-1, -1), 5),
])


def _fmt(value, spec=".6f"):
    return "-" if value is None else format(value, spec)


def default_pdf_path(problem_name):
    return os.path.join(OUTPUT_DIRECTORY, f"Study_Report_{problem_name or 'custom'}_{int(time.time())}.pdf")


def generate_study_report_pdf(report, path=None, title=None):
    """Write a PDF with the per-level table, bias metrics and references of a study; returns the path"""
    path = path or default_pdf_path(report.problem)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    doc = SimpleDocTemplate(path, pagesize=landscape(A4))
    styles = getSampleStyleSheet()
    elements = []

    elements.append(Paragraph(title or f"Monte Carlo Study: {report.problem or 'custom problem'}", styles["Title"]))
    elements.append(Spacer(1, 12))
    elements.append(Paragraph(f"Generated on: {time.strftime('%Y-%m-%d %H:%M:%S')}", styles["Normal"]))
    elements.append(Paragraph(f"Band quantiles at confidence level {report.confidence_level:.2f}", styles["Normal"]))
    elements.append(Spacer(1, 20))

    # Estimates per level
    elements.append(Paragraph("Estimates per Sample Level", styles["Heading2"]))
    data = [['Samples', 'Estimator', 'Average', 'Trimmed', 'Min', 'Max', 'q low', 'q high',
             'Exact', 'Perturbed', 'Poisoned']]
    for row in report.rows:
        data.append([f"{row.n_samples:,}", row.estimator, _fmt(row.mean), _fmt(row.trimmed_mean),
                     _fmt(row.band_low), _fmt(row.band_high), _fmt(row.q_low), _fmt(row.q_high),
                     _fmt(row.true_value), _fmt(row.reference_biased_value), str(row.poisoned_count)])
    table = Table(data, colWidths=[0.9*inch, 1.0*inch] + [0.85*inch] * 8 + [0.7*inch], repeatRows=1)
    table.setStyle(TABLE_STYLE)
    elements.append(table)
    elements.append(Spacer(1, 20))

    # Bias against the exact value
    metrics = compute_study_metrics(report)
    if metrics:
        elements.append(Paragraph("Bias Against the Exact Value", styles["Heading2"]))
        data = [['Samples', 'Estimator', 'Repeats', 'Bias', 'Bias SE', 'z', 'CI coverage', 'Verdict']]
        for m in metrics.values():
            data.append([f"{m.n_samples:,}", m.estimator, str(m.repeats), _fmt(m.bias, ".3e"),
                         _fmt(m.bias_std_error, ".3e"), _fmt(m.z_score, ".2f"),
                         _fmt(m.coverage, ".0%"), m.verdict])
        table = Table(data, repeatRows=1)
        table.setStyle(TABLE_STYLE)
        elements.append(table)
        elements.append(Spacer(1, 12))

        insights = analyze_convergence(metrics)
        if insights:
            elements.append(Paragraph("Observations", styles["Heading3"]))
            for line in insights:
                elements.append(Paragraph(f"• {line}", styles["Normal"]))

    doc.build(elements)
    return path
