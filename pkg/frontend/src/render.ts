/** Server-side SVG rendering via echarts SSR mode (no DOM required). */

import * as echarts from "echarts";
import type { EChartsOption } from "echarts";

export interface RenderOptions {
  width?: number;
  height?: number;
}

export function renderSvg(option: EChartsOption, opts: RenderOptions = {}): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: opts.width ?? 860,
    height: opts.height ?? 560,
  });
  try {
    chart.setOption({ animation: false, ...option });
    return canonicalizeClassNames(chart.renderToSVGString());
  } finally {
    chart.dispose();
  }
}

/**
 * The renderer derives CSS class names and clip-path ids from process-global
 * instance counters, so repeat renders of identical inputs differ only in
 * those tokens. Remap classes by first appearance and strip the instance
 * prefix from ids to make the output a pure function of the input.
 */
export function canonicalizeClassNames(svg: string): string {
  const mapping = new Map<string, string>();
  return svg
    .replace(/zr\d+-cls-\d+/g, (token) => {
      let canonical = mapping.get(token);
      if (canonical === undefined) {
        canonical = `zr-cls-${mapping.size}`;
        mapping.set(token, canonical);
      }
      return canonical;
    })
    .replace(/zr\d+-/g, "zr-");
}
